//! Experiment vocabulary and orchestration shared by the command-line
//! driver and the acceptance suite: which memory basis a channel attacks,
//! sweeping a channel family over a strength grid and a set of distances,
//! and the flat CSV row format results are persisted in.

use crate::montecarlo::{
    estimate_rate, ExperimentResult, FaultCountEstimate, Method, RunSpec,
};
use crate::noise::Channel;
use crate::surface::{build_code, Basis, Mode};
use crate::{PfsrError, Result};

/// What a configured run does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Logical-rate curves over a strength grid and distances, plus the
    /// crossing estimate.
    MemoryThreshold,
    /// One circuit-level configuration repeated across truncation cutoffs.
    TruncationSweep,
    /// Parallel vs layered circuit-level extraction on the same grid.
    ScheduleCompare,
    /// Fixed-fault-count estimation over a k window and a rate grid.
    ImportanceSampling,
    /// The dense-statevector equivalence suite.
    OracleSuite,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::MemoryThreshold => "memory_threshold",
            ExperimentKind::TruncationSweep => "truncation_sweep",
            ExperimentKind::ScheduleCompare => "schedule_compare",
            ExperimentKind::ImportanceSampling => "importance_sampling",
            ExperimentKind::OracleSuite => "oracle_suite",
        }
    }

    pub fn parse(s: &str) -> Result<ExperimentKind> {
        Ok(match s {
            "memory_threshold" => ExperimentKind::MemoryThreshold,
            "truncation_sweep" => ExperimentKind::TruncationSweep,
            "schedule_compare" => ExperimentKind::ScheduleCompare,
            "importance_sampling" => ExperimentKind::ImportanceSampling,
            "oracle_suite" => ExperimentKind::OracleSuite,
            other => {
                return Err(PfsrError::InvalidParameter(format!(
                    "unknown experiment kind {other:?}"
                )))
            }
        })
    }
}

/// The memory basis a channel's thresholds live in: the one whose logical
/// operator the channel's errors anticommute with. Damping and dephasing
/// noise (Y/Z-heavy) attack the |+>_L memory; bit-flip-heavy noise attacks
/// |0>_L; depolarizing is symmetric and uses the Z-basis convention.
pub fn default_basis(channel: &Channel) -> Basis {
    match channel {
        Channel::Depolarizing(_) | Channel::BitFlip(_) => Basis::Z,
        Channel::PhaseFlip(_) | Channel::AmplitudeDamping(_) | Channel::CoherentZ(_) => Basis::X,
    }
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Phenomenological => "phenomenological",
        Mode::CircuitLayered => "circuit_layered",
        Mode::CircuitParallel => "circuit_parallel",
    }
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    Ok(match s {
        "phenomenological" => Mode::Phenomenological,
        "circuit_layered" => Mode::CircuitLayered,
        "circuit_parallel" => Mode::CircuitParallel,
        other => {
            return Err(PfsrError::InvalidParameter(format!("unknown mode {other:?}")));
        }
    })
}

pub fn method_name(method: Method) -> &'static str {
    match method {
        Method::Exact => "exact",
        Method::Pta => "pta",
        Method::Quasiprob => "quasiprob",
    }
}

pub fn parse_method(s: &str) -> Result<Method> {
    Ok(match s {
        "exact" => Method::Exact,
        "pta" => Method::Pta,
        "quasiprob" => Method::Quasiprob,
        other => {
            return Err(PfsrError::InvalidParameter(format!("unknown method {other:?}")));
        }
    })
}

pub fn parse_channel(name: &str, strength: f64) -> Result<Channel> {
    let family = match name {
        "depolarizing" => Channel::Depolarizing(0.0),
        "bit_flip" => Channel::BitFlip(0.0),
        "phase_flip" => Channel::PhaseFlip(0.0),
        "amplitude_damping" => Channel::AmplitudeDamping(0.0),
        "coherent_z" => Channel::CoherentZ(0.0),
        other => {
            return Err(PfsrError::InvalidParameter(format!(
                "unknown channel {other:?}"
            )))
        }
    };
    family.with_strength(strength)
}

/// One logical-rate curve: the channel family swept over `grid` (comparable
/// strengths, strictly increasing) at a fixed distance. Every grid point
/// reuses the same master seed, so curves across distances share common
/// random numbers and crossing estimates lose the between-point jitter.
#[allow(clippy::too_many_arguments)]
pub fn run_curve(
    d: usize,
    channel_family: &Channel,
    grid: &[f64],
    mode: Mode,
    method: Method,
    epsilon: f64,
    shots: u64,
    master_seed: u64,
) -> Result<Vec<ExperimentResult>> {
    if grid.is_empty() {
        return Err(PfsrError::InvalidParameter("empty strength grid".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PfsrError::InvalidParameter(
            "strength grid must be strictly increasing".into(),
        ));
    }
    let code = build_code(d)?;
    let mut out = Vec::with_capacity(grid.len());
    for &v in grid {
        let channel = channel_family.with_strength(v)?;
        let spec = RunSpec {
            code: &code,
            basis: default_basis(&channel),
            channel,
            mode,
            epsilon,
            method,
        };
        out.push(estimate_rate(&spec, shots, master_seed)?);
    }
    Ok(out)
}

/// [`run_curve`] across distances; one curve per distance, in input order.
#[allow(clippy::too_many_arguments)]
pub fn run_curves(
    distances: &[usize],
    channel_family: &Channel,
    grid: &[f64],
    mode: Mode,
    method: Method,
    epsilon: f64,
    shots: u64,
    master_seed: u64,
) -> Result<Vec<Vec<ExperimentResult>>> {
    distances
        .iter()
        .map(|&d| run_curve(d, channel_family, grid, mode, method, epsilon, shots, master_seed))
        .collect()
}

/// Header of the flat results format; every emitted row has these columns.
pub const CSV_HEADER: &str =
    "experiment_id,d,mode,channel,param,k_or_total,shots,failures,discards,rate,stderr";

/// One direct-estimation result as a CSV row (`k_or_total` = "total").
pub fn result_row(
    experiment_id: &str,
    mode: Mode,
    channel: &Channel,
    result: &ExperimentResult,
) -> String {
    format!(
        "{experiment_id},{},{},{},{},total,{},{},{},{},{}",
        result.d,
        mode_name(mode),
        channel.name(),
        result.param,
        result.shots,
        result.failures,
        result.discards,
        result.rate,
        result.stderr,
    )
}

/// A fault-count estimate as CSV rows: one per sampled k holding the
/// conditional failure data (param = the nominal channel strength), then one
/// per grid rate with the assembled total estimate and its standard error.
pub fn importance_rows(
    experiment_id: &str,
    mode: Mode,
    channel: &Channel,
    d: usize,
    est: &FaultCountEstimate,
) -> Vec<String> {
    let mut rows = Vec::with_capacity(est.k_values.len() + est.p_grid.len());
    for (i, &k) in est.k_values.iter().enumerate() {
        let n = est.samples[i];
        let kept = n - est.discards[i];
        let rate = if kept == 0 { 0.0 } else { est.failures[i] as f64 / kept as f64 };
        let stderr = if kept == 0 { 0.0 } else { (rate * (1.0 - rate) / kept as f64).sqrt() };
        rows.push(format!(
            "{experiment_id},{d},{},{},{},{k},{n},{},{},{rate},{stderr}",
            mode_name(mode),
            channel.name(),
            channel.strength(),
            est.failures[i],
            est.discards[i],
        ));
    }
    for (j, &p) in est.p_grid.iter().enumerate() {
        rows.push(format!(
            "{experiment_id},{d},{},{},{p},total,0,0,0,{},{}",
            mode_name(mode),
            channel.name(),
            est.rates[j],
            est.variances[j].sqrt(),
        ));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bases_follow_the_attacked_logical() {
        assert_eq!(default_basis(&Channel::Depolarizing(0.1)), Basis::Z);
        assert_eq!(default_basis(&Channel::BitFlip(0.1)), Basis::Z);
        assert_eq!(default_basis(&Channel::PhaseFlip(0.1)), Basis::X);
        assert_eq!(default_basis(&Channel::AmplitudeDamping(0.1)), Basis::X);
        assert_eq!(default_basis(&Channel::CoherentZ(0.1)), Basis::X);
    }

    #[test]
    fn names_round_trip() {
        for kind in [
            ExperimentKind::MemoryThreshold,
            ExperimentKind::TruncationSweep,
            ExperimentKind::ScheduleCompare,
            ExperimentKind::ImportanceSampling,
            ExperimentKind::OracleSuite,
        ] {
            assert_eq!(ExperimentKind::parse(kind.name()).unwrap(), kind);
        }
        for mode in [Mode::Phenomenological, Mode::CircuitLayered, Mode::CircuitParallel] {
            assert_eq!(parse_mode(mode_name(mode)).unwrap(), mode);
        }
        for method in [Method::Exact, Method::Pta, Method::Quasiprob] {
            assert_eq!(parse_method(method_name(method)).unwrap(), method);
        }
        for ch in [
            Channel::Depolarizing(0.25),
            Channel::BitFlip(0.25),
            Channel::PhaseFlip(0.25),
            Channel::AmplitudeDamping(0.25),
            Channel::CoherentZ(0.25),
        ] {
            let back = parse_channel(ch.name(), ch.strength()).unwrap();
            assert_eq!(back.name(), ch.name());
            assert!((back.strength() - ch.strength()).abs() < 1e-12);
        }
        assert!(ExperimentKind::parse("bogus").is_err());
        assert!(parse_mode("bogus").is_err());
        assert!(parse_method("bogus").is_err());
        assert!(parse_channel("bogus", 0.1).is_err());
    }

    #[test]
    fn coherent_strength_inverts_to_the_angle() {
        let ch = Channel::CoherentZ(0.0).with_strength(0.04).unwrap();
        let Channel::CoherentZ(theta) = ch else { panic!("family changed") };
        assert!(((theta / 2.0).sin().powi(2) - 0.04).abs() < 1e-12);
        assert!(Channel::CoherentZ(0.0).with_strength(1.5).is_err());
    }

    #[test]
    fn curves_cover_the_grid_deterministically() {
        let grid = [0.01, 0.02, 0.05];
        let family = Channel::Depolarizing(0.0);
        let curves = run_curves(
            &[3],
            &family,
            &grid,
            Mode::Phenomenological,
            Method::Exact,
            0.0,
            200,
            7,
        )
        .unwrap();
        assert_eq!(curves.len(), 1);
        let curve = &curves[0];
        assert_eq!(curve.len(), 3);
        for (r, &p) in curve.iter().zip(&grid) {
            assert_eq!(r.d, 3);
            assert_eq!(r.param, p);
            assert_eq!(r.shots, 200);
        }
        let again = run_curve(
            3,
            &family,
            &grid,
            Mode::Phenomenological,
            Method::Exact,
            0.0,
            200,
            7,
        )
        .unwrap();
        assert_eq!(curve, &again);
        assert!(run_curve(
            3,
            &family,
            &[0.05, 0.01],
            Mode::Phenomenological,
            Method::Exact,
            0.0,
            10,
            7
        )
        .is_err());
    }

    #[test]
    fn csv_rows_have_the_header_shape() {
        let cols = CSV_HEADER.split(',').count();
        let family = Channel::Depolarizing(0.0);
        let curve = run_curve(
            3,
            &family,
            &[0.02],
            Mode::Phenomenological,
            Method::Exact,
            0.0,
            50,
            7,
        )
        .unwrap();
        let ch = family.with_strength(0.02).unwrap();
        let row = result_row("demo", Mode::Phenomenological, &ch, &curve[0]);
        assert_eq!(row.split(',').count(), cols);
        assert!(row.starts_with("demo,3,phenomenological,depolarizing,0.02,total,50,"));

        let est = FaultCountEstimate {
            n_locations: 51,
            k_values: vec![2, 3],
            samples: vec![100, 100],
            failures: vec![1, 7],
            discards: vec![0, 0],
            p_grid: vec![0.01],
            rates: vec![3.4e-4],
            variances: vec![1.1e-9],
            tail_bounds: vec![1e-8],
        };
        let rows = importance_rows("imp", Mode::CircuitLayered, &ch, 3, &est);
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert_eq!(row.split(',').count(), cols, "row {row}");
        }
        assert!(rows[0].contains(",2,100,1,0,"));
        assert!(rows[2].contains(",total,"));
    }
}
