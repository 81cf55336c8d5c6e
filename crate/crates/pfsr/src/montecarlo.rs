//! Trajectory sampling, logical-rate and threshold estimation, and the
//! fixed-fault-count importance sampler.
//!
//! Everything here is deterministic given a master seed: trajectory `i` of
//! stream `s` draws from a ChaCha12 generator keyed by `(master_seed, s, i)`,
//! so results never depend on scheduling or worker assignment. Direct
//! estimation uses stream 0, fault-count sampling uses one stream per `k`
//! (offset by stage so pilot and production runs stay independent), and
//! bootstrap resampling uses a reserved stream.
//!
//! The importance sampler targets the low-rate regime: enumerate the `n_L`
//! fault locations of a circuit, sample trajectories with exactly `k`
//! uniformly placed faults, and recombine as `p_fail(p) = sum_k P(k)
//! p_fail|k` with the binomial weights `P(k)` evaluated in log space. Fault
//! counts below the code's distance floor can never fail; that zero block is
//! enforced in the estimator and verified against every sample. Coherent and
//! amplitude-damping channels house no discrete fault events, so the sampler
//! rejects them; direct estimation handles every channel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::decoder::{build_weighted_matching_graph, decode_record, MatchingGraph};
use crate::noise::{
    Channel, CountingDriver, ExactDriver, FaultAction, InjectedDriver, NoiseDriver, PtaDriver,
    QuasiDriver, SiteKind,
};
use crate::surface::{
    circuit_level_schedule, phenomenological_schedule, run_memory_experiment_scheduled, Basis,
    Mode, RotatedSurfaceCode, ScheduleStep, SyndromeRecord,
};
use crate::{PfsrError, Result};

/// How channel applications are realized along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Pta,
    Quasiprob,
}

/// One memory-experiment configuration to estimate.
#[derive(Debug, Clone)]
pub struct RunSpec<'a> {
    pub code: &'a RotatedSurfaceCode,
    pub basis: Basis,
    pub channel: Channel,
    pub mode: Mode,
    /// Truncation threshold passed through to the state (0 disables).
    pub epsilon: f64,
    pub method: Method,
}

/// Aggregated outcome of a direct estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Comparable channel strength: p for flip/depolarizing channels, gamma
    /// for amplitude damping, sin^2(theta/2) for coherent rotations.
    pub param: f64,
    pub d: usize,
    pub shots: u64,
    pub failures: u64,
    pub discards: u64,
    /// failures/kept; for quasiprobability runs the signed-weight mean,
    /// which may leave [0, 1].
    pub rate: f64,
    /// Binomial standard error; sample standard error for signed weights.
    pub stderr: f64,
    /// Largest sparse-map size any trajectory reached.
    pub max_entries: usize,
    /// Mean over trajectories of ln(per-trajectory max entries); exp of
    /// this is the geometric-mean sparsity growth.
    pub mean_ln_entries: f64,
    pub truncation_fallbacks: u64,
}

/// Deterministic per-trajectory generator: worker assignment and iteration
/// order never affect which random stream a trajectory consumes.
pub fn trajectory_rng(master_seed: u64, stream: u64, index: u64) -> ChaCha12Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&stream.to_le_bytes());
    seed[16..24].copy_from_slice(&index.to_le_bytes());
    seed[24..].copy_from_slice(&0x9e37_79b9_7f4a_7c15u64.to_le_bytes());
    ChaCha12Rng::from_seed(seed)
}

const STREAM_DIRECT: u64 = 0;
const STREAM_BOOTSTRAP: u64 = u64::MAX;

fn stream_for_k(stage: u64, k: usize) -> u64 {
    (stage << 32) | (k as u64 + 1)
}

fn schedule_for(spec: &RunSpec) -> Vec<ScheduleStep> {
    match spec.mode {
        Mode::Phenomenological => phenomenological_schedule(spec.code),
        Mode::CircuitLayered => circuit_level_schedule(spec.code, true),
        Mode::CircuitParallel => circuit_level_schedule(spec.code, false),
    }
}

fn run_one<D: NoiseDriver<f64>, R: Rng + ?Sized>(
    spec: &RunSpec,
    schedule: &[ScheduleStep],
    driver: &mut D,
    rng: &mut R,
) -> Result<SyndromeRecord> {
    run_memory_experiment_scheduled(
        spec.code,
        spec.basis,
        &spec.channel,
        spec.mode,
        schedule,
        spec.epsilon,
        driver,
        rng,
    )
}

fn run_with_method<R: Rng + ?Sized>(
    spec: &RunSpec,
    schedule: &[ScheduleStep],
    rng: &mut R,
) -> Result<SyndromeRecord> {
    match spec.method {
        Method::Exact => run_one(spec, schedule, &mut ExactDriver, rng),
        Method::Pta => run_one(spec, schedule, &mut PtaDriver, rng),
        Method::Quasiprob => run_one(spec, schedule, &mut QuasiDriver::default(), rng),
    }
}

/// Per-round error rates seen by the decoded sector: the probability that
/// one channel application flips a data qubit in the memory basis (Y counts,
/// plus whichever single-axis Pauli anticommutes with the basis operator),
/// and the probability that one recorded outcome is flipped. Pauli-twirled
/// rates stand in for the non-Pauli channels; the decoder only needs the
/// relative space/time likelihoods, not the channel's full action.
fn sector_rates(channel: &Channel, basis: Basis) -> (f64, f64) {
    let [_, px, py, pz] = channel.pta_probabilities();
    let p_space = py
        + match basis {
            Basis::Z => px,
            Basis::X => pz,
        };
    (p_space, channel.flip_rate())
}

/// The decoding metric for a run: space and time edges weighted by the
/// channel's basis-flip and readout-flip rates.
fn graph_for(spec: &RunSpec) -> MatchingGraph {
    let (p_space, p_time) = sector_rates(&spec.channel, spec.basis);
    build_weighted_matching_graph(spec.code, spec.code.distance() + 1, spec.basis, p_space, p_time)
}

/// Estimate the logical failure rate over `shots` independent trajectories.
pub fn estimate_rate(spec: &RunSpec, shots: u64, master_seed: u64) -> Result<ExperimentResult> {
    spec.channel.validate()?;
    if shots == 0 {
        return Err(PfsrError::InvalidParameter("shot count must be >= 1".into()));
    }
    let schedule = schedule_for(spec);
    let graph = graph_for(spec);
    let mut failures = 0u64;
    let mut max_entries = 0usize;
    let mut sum_ln_entries = 0.0f64;
    let mut fallbacks = 0u64;
    // Signed-weight accumulators (weights are all 1 outside quasiprob runs).
    let mut wsum = 0.0f64;
    let mut wsum2 = 0.0f64;
    for i in 0..shots {
        let mut rng = trajectory_rng(master_seed, STREAM_DIRECT, i);
        let rec = run_with_method(spec, &schedule, &mut rng)?;
        let fail = decode_record(&rec, spec.code, &graph)?;
        failures += u64::from(fail);
        max_entries = max_entries.max(rec.max_entries);
        sum_ln_entries += (rec.max_entries as f64).ln();
        fallbacks += rec.truncation_fallbacks;
        let wf = rec.weight * f64::from(u8::from(fail));
        wsum += wf;
        wsum2 += wf * wf;
    }
    let kept = shots as f64;
    let (rate, stderr) = if spec.method == Method::Quasiprob {
        let mean = wsum / kept;
        let var = (wsum2 / kept - mean * mean).max(0.0);
        (mean, (var / kept).sqrt())
    } else {
        let rate = failures as f64 / kept;
        (rate, (rate * (1.0 - rate) / kept).sqrt())
    };
    Ok(ExperimentResult {
        param: spec.channel.strength(),
        d: spec.code.distance(),
        shots,
        failures,
        discards: 0,
        rate,
        stderr,
        max_entries,
        mean_ln_entries: sum_ln_entries / kept,
        truncation_fallbacks: fallbacks,
    })
}

/// Threshold crossing and bootstrap confidence interval.
#[derive(Debug, Clone)]
pub struct ThresholdEstimate {
    pub threshold: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// (smaller d, larger d, crossing) for each consecutive-distance pair.
    pub pairwise: Vec<(usize, usize, f64)>,
    /// Bootstrap resamples in which every pair still crossed.
    pub resamples_used: usize,
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// First log-log crossing of two curves sharing a parameter grid; both rates
/// must be positive on the bracketing points. Curves that coincide wherever
/// defined have no crossing.
fn pair_crossing(params: &[f64], r1: &[f64], r2: &[f64]) -> Option<f64> {
    let diff: Vec<Option<f64>> = r1
        .iter()
        .zip(r2)
        .map(|(&a, &b)| (a > 0.0 && b > 0.0).then(|| a.ln() - b.ln()))
        .collect();
    if diff.iter().flatten().all(|&d| d == 0.0) {
        return None;
    }
    for i in 0..params.len() - 1 {
        let (Some(d0), Some(d1)) = (diff[i], diff[i + 1]) else {
            continue;
        };
        if d0 == 0.0 && d1 == 0.0 {
            continue;
        }
        if d0 == 0.0 {
            return Some(params[i]);
        }
        if d1 == 0.0 {
            return Some(params[i + 1]);
        }
        if d0 * d1 < 0.0 {
            let (x0, x1) = (params[i].ln(), params[i + 1].ln());
            let t = d0 / (d0 - d1);
            return Some((x0 + t * (x1 - x0)).exp());
        }
    }
    None
}

fn curve_diagnostics(curves: &[Vec<ExperimentResult>]) -> String {
    curves
        .iter()
        .map(|c| {
            let d = c.first().map_or(0, |r| r.d);
            let lo = c.first().map_or(0.0, |r| r.param);
            let hi = c.last().map_or(0.0, |r| r.param);
            let rates: Vec<String> = c.iter().map(|r| format!("{:.3e}", r.rate)).collect();
            format!("d={d} over [{lo:.4}, {hi:.4}]: rates [{}]", rates.join(", "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Draw from Binomial(n, p): exhaustive for small n, Poisson tail for rare
/// events, normal elsewhere. Deterministic given the generator.
fn resample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    let q = p.min(1.0 - p);
    let lam = n as f64 * q;
    let hits = if n <= 2000 {
        (0..n).filter(|_| rng.gen::<f64>() < q).count() as u64
    } else if lam * (1.0 - q) < 100.0 {
        // Knuth's product-of-uniforms Poisson, valid for moderate lambda.
        let limit = (-lam).exp();
        let mut k = 0u64;
        let mut prod = 1.0f64;
        loop {
            prod *= rng.gen::<f64>();
            if prod <= limit {
                break;
            }
            k += 1;
        }
        k.min(n)
    } else {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        let x = (lam + z * (lam * (1.0 - q)).sqrt()).round();
        x.clamp(0.0, n as f64) as u64
    };
    if p <= 0.5 {
        hits
    } else {
        n - hits
    }
}

/// Estimate the threshold from per-distance rate curves: log-linear
/// interpolation, mean crossing over consecutive-distance pairs, and a
/// percentile interval from [`BOOTSTRAP_RESAMPLES`] binomial resamples.
pub fn estimate_threshold(
    curves: &[Vec<ExperimentResult>],
    master_seed: u64,
) -> Result<ThresholdEstimate> {
    let mut curves: Vec<&Vec<ExperimentResult>> = curves.iter().collect();
    curves.sort_by_key(|c| c.first().map_or(0, |r| r.d));
    if curves.len() < 2 {
        return Err(PfsrError::InvalidParameter(
            "threshold estimation needs at least two distances".into(),
        ));
    }
    let params: Vec<f64> = curves[0].iter().map(|r| r.param).collect();
    if params.len() < 4 || params.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PfsrError::InvalidParameter(
            "parameter grid must be strictly increasing with >= 4 points".into(),
        ));
    }
    for c in &curves {
        if c.iter().map(|r| r.param).ne(params.iter().copied()) {
            return Err(PfsrError::InvalidParameter(
                "all distance curves must share one parameter grid".into(),
            ));
        }
        if c.iter().any(|r| r.d != c[0].d) {
            return Err(PfsrError::InvalidParameter(
                "each curve must hold a single distance".into(),
            ));
        }
    }
    let diag = || curve_diagnostics(&curves.iter().map(|c| (*c).clone()).collect::<Vec<_>>());
    let crossings_of = |rates: &[Vec<f64>]| -> Option<Vec<f64>> {
        let mut xs = Vec::new();
        for w in rates.windows(2) {
            xs.push(pair_crossing(&params, &w[0], &w[1])?);
        }
        Some(xs)
    };
    let point_rates: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| c.iter().map(|r| r.rate).collect())
        .collect();
    let Some(point) = crossings_of(&point_rates) else {
        return Err(PfsrError::InvalidParameter(format!(
            "no threshold crossing in range: {}",
            diag()
        )));
    };
    let pairwise: Vec<(usize, usize, f64)> = point
        .iter()
        .enumerate()
        .map(|(i, &x)| (curves[i][0].d, curves[i + 1][0].d, x))
        .collect();
    let threshold = point.iter().sum::<f64>() / point.len() as f64;
    let mut boots = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for r in 0..BOOTSTRAP_RESAMPLES {
        let mut rng = trajectory_rng(master_seed, STREAM_BOOTSTRAP, r as u64);
        let rates: Vec<Vec<f64>> = curves
            .iter()
            .map(|c| {
                c.iter()
                    .map(|pt| {
                        let kept = pt.shots - pt.discards;
                        let f = resample_binomial(kept, pt.rate.clamp(0.0, 1.0), &mut rng);
                        f as f64 / kept.max(1) as f64
                    })
                    .collect()
            })
            .collect();
        if let Some(xs) = crossings_of(&rates) {
            boots.push(xs.iter().sum::<f64>() / xs.len() as f64);
        }
    }
    if boots.len() < BOOTSTRAP_RESAMPLES / 2 {
        return Err(PfsrError::InvalidParameter(format!(
            "threshold crossing unstable under resampling ({} of {BOOTSTRAP_RESAMPLES} \
             resamples crossed): {}",
            boots.len(),
            diag()
        )));
    }
    boots.sort_by(|a, b| a.total_cmp(b));
    let pct = |q: f64| boots[((boots.len() - 1) as f64 * q).round() as usize];
    Ok(ThresholdEstimate {
        threshold,
        ci_low: pct(0.025),
        ci_high: pct(0.975),
        pairwise,
        resamples_used: boots.len(),
    })
}

/// One potentially faulty circuit location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultLocation {
    /// Site index in the schedule walker's traversal order.
    pub site: usize,
    pub kind: SiteKind,
}

/// Ordered fault locations of one memory circuit under one channel.
#[derive(Debug, Clone)]
pub struct FaultModel {
    pub locations: Vec<FaultLocation>,
    pub channel: Channel,
}

impl FaultModel {
    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn num_channel_sites(&self) -> usize {
        self.locations.iter().filter(|l| l.kind == SiteKind::Channel).count()
    }

    pub fn num_pair_sites(&self) -> usize {
        self.locations.iter().filter(|l| l.kind == SiteKind::PairChannel).count()
    }

    pub fn num_flip_sites(&self) -> usize {
        self.locations.iter().filter(|l| l.kind == SiteKind::Flip).count()
    }
}

/// Enumerate fault locations by dry-running the experiment with a counting
/// driver; the traversal order is the same one every sampling run uses.
pub fn enumerate_faults_scheduled(
    spec: &RunSpec,
    schedule: &[ScheduleStep],
) -> Result<FaultModel> {
    let mut driver = CountingDriver::default();
    let mut rng = trajectory_rng(0, 0, 0);
    run_memory_experiment_scheduled::<f64, _, _>(
        spec.code,
        spec.basis,
        &spec.channel,
        spec.mode,
        schedule,
        spec.epsilon,
        &mut driver,
        &mut rng,
    )?;
    Ok(FaultModel {
        locations: driver
            .kinds
            .iter()
            .enumerate()
            .map(|(site, &kind)| FaultLocation { site, kind })
            .collect(),
        channel: spec.channel,
    })
}

/// Fault locations of the mode's standard schedule.
pub fn enumerate_faults(spec: &RunSpec) -> Result<FaultModel> {
    enumerate_faults_scheduled(spec, &schedule_for(spec))
}

/// Nontrivial outcomes a channel site can host, drawn uniformly when a fault
/// lands there. Channels without discrete fault events are rejected.
fn channel_fault_actions(ch: &Channel) -> Result<&'static [FaultAction]> {
    match ch {
        Channel::Depolarizing(_) => Ok(&[
            FaultAction::PauliX,
            FaultAction::PauliY,
            FaultAction::PauliZ,
        ]),
        Channel::BitFlip(_) => Ok(&[FaultAction::PauliX]),
        Channel::PhaseFlip(_) => Ok(&[FaultAction::PauliZ]),
        Channel::AmplitudeDamping(_) | Channel::CoherentZ(_) => Err(PfsrError::InvalidParameter(
            "fixed-fault-count sampling needs a discrete fault model \
             (bit-flip, phase-flip, or depolarizing)"
                .into(),
        )),
    }
}

/// Outcome of one fixed-fault-count trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedKOutcome {
    pub fail: bool,
    pub discard: bool,
}

/// Run one trajectory with exactly `k` faults at uniformly chosen locations,
/// noiseless elsewhere.
pub fn sample_fixed_k<R: Rng + ?Sized>(
    spec: &RunSpec,
    schedule: &[ScheduleStep],
    graph: &MatchingGraph,
    model: &FaultModel,
    k: usize,
    rng: &mut R,
) -> Result<FixedKOutcome> {
    let actions = channel_fault_actions(&model.channel)?;
    let n_l = model.locations.len();
    if k > n_l {
        return Err(PfsrError::InvalidParameter(format!(
            "fault count {k} exceeds the {n_l} locations"
        )));
    }
    let mut driver = InjectedDriver::default();
    for idx in rand::seq::index::sample(rng, n_l, k) {
        let loc = model.locations[idx];
        let action = match loc.kind {
            SiteKind::Flip => FaultAction::Flip,
            SiteKind::Channel => actions[rng.gen_range(0..actions.len())],
            SiteKind::PairChannel => {
                // Uniform over the fifteen nontrivial two-qubit Paulis.
                let which = rng.gen_range(1..16u8);
                FaultAction::PauliPair(which >> 2, which & 3)
            }
        };
        driver.faults.insert(loc.site, action);
    }
    let rec = run_one(spec, schedule, &mut driver, rng)?;
    Ok(FixedKOutcome {
        fail: decode_record(&rec, spec.code, graph)?,
        discard: false,
    })
}

/// Per-fault-count samples recombined into rate curves over a p-grid.
#[derive(Debug, Clone)]
pub struct FaultCountEstimate {
    pub n_locations: usize,
    /// Sampled fault counts, ascending.
    pub k_values: Vec<usize>,
    pub samples: Vec<u64>,
    pub failures: Vec<u64>,
    pub discards: Vec<u64>,
    pub p_grid: Vec<f64>,
    /// p_fail(p) = sum_k P(k) failures_k/samples_k over the window.
    pub rates: Vec<f64>,
    /// Per-p variance: sum_k P(k)^2 p_k(1-p_k)/N_k.
    pub variances: Vec<f64>,
    /// Neglected upper-tail mass sum_{k > k_max} P(k) per grid point; an
    /// upper bound on the omitted contribution since p_fail|k <= 1.
    pub tail_bounds: Vec<f64>,
}

/// ln C(n, k) by compensated summation of the term ratios.
pub fn log_binomial_coefficient(n: usize, k: usize) -> f64 {
    assert!(k <= n, "binomial coefficient needs k <= n");
    let k = k.min(n - k);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for j in 0..k {
        let term = ((n - j) as f64).ln() - ((j + 1) as f64).ln();
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// The full binomial pmf row P(k) = C(n,k) p^k (1-p)^(n-k), evaluated in log
/// space so n ~ 10^4 stays finite, exponentiated per term.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut row = Vec::with_capacity(n + 1);
    let mut lnc = 0.0f64;
    let mut comp = 0.0f64;
    for k in 0..=n {
        if k > 0 {
            let term = ((n - k + 1) as f64).ln() - (k as f64).ln();
            let y = term - comp;
            let t = lnc + y;
            comp = (t - lnc) - y;
            lnc = t;
        }
        row.push((lnc + k as f64 * lp + (n - k) as f64 * lq).exp());
    }
    row
}

/// Fault counts that can never fail: below the distance floor every fault
/// set is corrected (or detected and discarded under postselection).
pub fn zero_block_floor(d: usize) -> usize {
    d.div_ceil(2)
}

/// Recombine per-k failure fractions into p_fail(p) curves with the paper's
/// variance formula. The window must be sampled (N_k > 0 everywhere).
pub fn importance_estimate(
    n_locations: usize,
    d: usize,
    k_values: &[usize],
    samples: &[u64],
    failures: &[u64],
    discards: &[u64],
    p_grid: &[f64],
) -> Result<FaultCountEstimate> {
    if k_values.is_empty() {
        return Err(PfsrError::InvalidParameter(
            "importance window is empty".into(),
        ));
    }
    if k_values.len() != samples.len()
        || samples.len() != failures.len()
        || failures.len() != discards.len()
    {
        return Err(PfsrError::InvalidParameter(
            "per-k arrays must share one length".into(),
        ));
    }
    if k_values.windows(2).any(|w| w[0] >= w[1]) || *k_values.last().unwrap() > n_locations {
        return Err(PfsrError::InvalidParameter(
            "fault counts must be ascending and within the location count".into(),
        ));
    }
    for (i, &k) in k_values.iter().enumerate() {
        if samples[i] == 0 {
            return Err(PfsrError::InvalidParameter(format!(
                "no samples at fault count {k}"
            )));
        }
        if k < zero_block_floor(d) && failures[i] > 0 {
            return Err(PfsrError::InvalidParameter(format!(
                "zero-block violation: {} failures at fault count {k} below the \
                 distance floor {}",
                failures[i],
                zero_block_floor(d)
            )));
        }
    }
    let k_max = *k_values.last().unwrap();
    let mut rates = Vec::with_capacity(p_grid.len());
    let mut variances = Vec::with_capacity(p_grid.len());
    let mut tails = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        if !(0.0..=1.0).contains(&p) {
            return Err(PfsrError::InvalidParameter(format!(
                "physical rate {p} outside [0, 1]"
            )));
        }
        let pmf = binomial_pmf(n_locations, p);
        let mut rate = 0.0;
        let mut var = 0.0;
        for (i, &k) in k_values.iter().enumerate() {
            // The floor is enforced here and verified against samples above.
            if k < zero_block_floor(d) {
                continue;
            }
            let pk = pmf[k];
            let fk = failures[i] as f64 / samples[i] as f64;
            rate += pk * fk;
            var += pk * pk * fk * (1.0 - fk) / samples[i] as f64;
        }
        rates.push(rate);
        variances.push(var);
        tails.push(pmf[k_max + 1..].iter().sum::<f64>());
    }
    Ok(FaultCountEstimate {
        n_locations,
        k_values: k_values.to_vec(),
        samples: samples.to_vec(),
        failures: failures.to_vec(),
        discards: discards.to_vec(),
        p_grid: p_grid.to_vec(),
        rates,
        variances,
        tail_bounds: tails,
    })
}

/// Sample every fault count in `k_values` and recombine. `stage` separates
/// rng streams between pilot and production phases.
pub fn run_importance_sampling(
    spec: &RunSpec,
    k_values: &[usize],
    shots_per_k: &[u64],
    p_grid: &[f64],
    master_seed: u64,
    stage: u64,
) -> Result<FaultCountEstimate> {
    if k_values.len() != shots_per_k.len() {
        return Err(PfsrError::InvalidParameter(
            "one shot count per fault count required".into(),
        ));
    }
    let schedule = schedule_for(spec);
    let model = enumerate_faults_scheduled(spec, &schedule)?;
    channel_fault_actions(&model.channel)?;
    let graph = graph_for(spec);
    let mut samples = Vec::with_capacity(k_values.len());
    let mut failures = Vec::with_capacity(k_values.len());
    let mut discards = Vec::with_capacity(k_values.len());
    for (&k, &shots) in k_values.iter().zip(shots_per_k) {
        let mut fails = 0u64;
        let mut disc = 0u64;
        for i in 0..shots {
            let mut rng = trajectory_rng(master_seed, stream_for_k(stage, k), i);
            let out = sample_fixed_k(spec, &schedule, &graph, &model, k, &mut rng)?;
            fails += u64::from(out.fail);
            disc += u64::from(out.discard);
        }
        samples.push(shots);
        failures.push(fails);
        discards.push(disc);
    }
    importance_estimate(
        model.num_locations(),
        spec.code.distance(),
        k_values,
        &samples,
        &failures,
        &discards,
        p_grid,
    )
}

/// Per-k production shot counts derived from pilot contributions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotPlan {
    pub k_values: Vec<usize>,
    pub shots: Vec<u64>,
}

/// Minimum shots any retained fault count receives.
pub const MIN_SHOTS_PER_K: u64 = 100;

/// Apportion `budget` over fault counts proportionally to their pilot
/// contribution sum_p P(k) p_fail|k, keeping the window tail under 1% of the
/// total and flooring every retained k at [`MIN_SHOTS_PER_K`]. A pilot with
/// no contribution anywhere falls back to a uniform plan.
pub fn allocate_shots(
    pilot: &FaultCountEstimate,
    p_targets: &[f64],
    budget: u64,
) -> ShotPlan {
    let ks = &pilot.k_values;
    let mut contrib = vec![0.0f64; ks.len()];
    for &p in p_targets {
        let pmf = binomial_pmf(pilot.n_locations, p);
        for (i, &k) in ks.iter().enumerate() {
            let fk = pilot.failures[i] as f64 / pilot.samples[i] as f64;
            contrib[i] += pmf[k] * fk;
        }
    }
    let total: f64 = contrib.iter().sum();
    let uniform = |ks: &[usize]| -> ShotPlan {
        let each = budget / ks.len() as u64;
        ShotPlan {
            k_values: ks.to_vec(),
            shots: vec![each; ks.len()],
        }
    };
    if total <= 0.0 {
        return uniform(ks);
    }
    // Keep the top contributors covering >= 99% of the estimate, as a
    // contiguous window so production sampling stays gap-free.
    let mut order: Vec<usize> = (0..ks.len()).collect();
    order.sort_by(|&a, &b| contrib[b].total_cmp(&contrib[a]).then(a.cmp(&b)));
    let mut running = 0.0;
    let mut cut = 0;
    for (rank, &i) in order.iter().enumerate() {
        running += contrib[i];
        cut = rank + 1;
        if running >= 0.99 * total {
            break;
        }
    }
    let lo = order[..cut].iter().min().copied().unwrap_or(0);
    let hi = order[..cut].iter().max().copied().unwrap_or(0);
    let mut active: Vec<usize> = (lo..=hi).collect();
    // The floor must fit the budget; shed the weakest tail entries if not.
    while MIN_SHOTS_PER_K * active.len() as u64 > budget && active.len() > 1 {
        let weakest = active
            .iter()
            .copied()
            .min_by(|&a, &b| contrib[a].total_cmp(&contrib[b]))
            .unwrap();
        active.retain(|&i| i != weakest);
    }
    let active_total: f64 = active.iter().map(|&i| contrib[i]).sum();
    let spare = budget - MIN_SHOTS_PER_K * active.len() as u64;
    let mut shots: Vec<u64> = active
        .iter()
        .map(|&i| {
            let share = if active_total > 0.0 {
                contrib[i] / active_total
            } else {
                1.0 / active.len() as f64
            };
            MIN_SHOTS_PER_K + (share * spare as f64).floor() as u64
        })
        .collect();
    // Flooring leaves a remainder; push it onto the largest contributor.
    let assigned: u64 = shots.iter().sum();
    if let Some(best) = active
        .iter()
        .enumerate()
        .max_by(|(_, &a), (_, &b)| contrib[a].total_cmp(&contrib[b]))
        .map(|(pos, _)| pos)
    {
        shots[best] += budget - assigned;
    }
    ShotPlan {
        k_values: active.iter().map(|&i| ks[i]).collect(),
        shots,
    }
}
