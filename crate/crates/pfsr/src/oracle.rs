//! Lockstep equivalence harness: random near-Clifford circuits with
//! interleaved measurements and stochastic channels, run simultaneously on
//! the sparse representation and on a dense statevector. Every random
//! decision is sampled once and replayed on the dense side -- measurement
//! outcomes are forced to the sparse draw, Kraus branches are recorded and
//! applied identically -- so a final-overlap drop isolates a representation
//! bug rather than sampling noise.

use num_complex::Complex;
use rand::Rng;
use std::f64::consts::PI;

use crate::dense::{fidelity, oracle_cap, DenseState};
use crate::montecarlo::trajectory_rng;
use crate::noise::Channel;
use crate::pauli::PauliString;
use crate::state::PfsrState;
use crate::tableau::Gate;
use crate::{PfsrError, Result};

/// Seed stream for suite circuits, distinct from the estimation streams.
pub const ORACLE_STREAM: u64 = u64::MAX - 1;

/// One step of a generated test circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Clifford(Gate),
    /// `exp(-i theta Z_k / 2)`; theta = pi/4 is the T gate up to phase.
    Rz(usize, f64),
    /// Single-qubit measurement; `true` measures X, otherwise Z.
    Measure(usize, bool),
    Noise(usize, Channel),
}

/// Random circuit over {H, S, CNOT, T, R_Z} with interleaved measurements
/// and noise. Needs `n >= 2` so CNOT always has two distinct qubits.
pub fn random_circuit<R: Rng + ?Sized>(n: usize, depth: usize, rng: &mut R) -> Vec<Step> {
    let mut steps = Vec::with_capacity(depth);
    for _ in 0..depth {
        let q = rng.gen_range(0..n);
        steps.push(match rng.gen_range(0..10u8) {
            0 | 1 => Step::Clifford(Gate::H(q)),
            2 => Step::Clifford(Gate::S(q)),
            3 | 4 => {
                let mut t = rng.gen_range(0..n - 1);
                if t >= q {
                    t += 1;
                }
                Step::Clifford(Gate::Cnot(q, t))
            }
            5 => Step::Rz(q, PI / 4.0),
            6 => Step::Rz(q, rng.gen_range(-PI..PI)),
            7 => Step::Measure(q, rng.gen_bool(0.5)),
            _ => Step::Noise(q, random_channel(rng)),
        });
    }
    steps
}

fn random_channel<R: Rng + ?Sized>(rng: &mut R) -> Channel {
    match rng.gen_range(0..5u8) {
        0 => Channel::Depolarizing(rng.gen_range(0.0..0.3)),
        1 => Channel::BitFlip(rng.gen_range(0.0..0.3)),
        2 => Channel::PhaseFlip(rng.gen_range(0.0..0.3)),
        3 => Channel::AmplitudeDamping(rng.gen_range(0.0..0.5)),
        _ => Channel::CoherentZ(rng.gen_range(-1.5..1.5)),
    }
}

fn branch_pauli(n: usize, k: usize, branch: u8) -> PauliString {
    match branch {
        1 => PauliString::x_op(n, k),
        2 => PauliString::y_op(n, k),
        _ => PauliString::z_op(n, k),
    }
}

fn rz_terms(n: usize, k: usize, theta: f64) -> [(Complex<f64>, PauliString); 2] {
    let half = theta / 2.0;
    [
        (Complex::new(half.cos(), 0.0), PauliString::identity(n)),
        (Complex::new(0.0, -half.sin()), PauliString::z_op(n, k)),
    ]
}

/// Sample one stochastic realization of `ch` on qubit `k`, apply the same
/// branch to both representations, and return the branch index (0 = the
/// identity-like branch). The no-jump weight for damping comes from the
/// dense side, keeping the oracle the arbiter of Born statistics.
fn apply_channel_lockstep<R: Rng + ?Sized>(
    sp: &mut PfsrState<f64>,
    dn: &mut DenseState<f64>,
    k: usize,
    ch: &Channel,
    rng: &mut R,
) -> Result<u8> {
    let n = sp.num_qubits();
    match *ch {
        Channel::Depolarizing(p) => {
            let branch = if rng.gen::<f64>() < p {
                rng.gen_range(1..=3u8)
            } else {
                0
            };
            if branch != 0 {
                let op = branch_pauli(n, k, branch);
                sp.apply_pauli(&op)?;
                dn.apply_pauli(&op)?;
            }
            Ok(branch)
        }
        Channel::BitFlip(p) => {
            let branch = u8::from(rng.gen::<f64>() < p);
            if branch != 0 {
                let op = PauliString::x_op(n, k);
                sp.apply_pauli(&op)?;
                dn.apply_pauli(&op)?;
            }
            Ok(branch)
        }
        Channel::PhaseFlip(p) => {
            let branch = u8::from(rng.gen::<f64>() < p);
            if branch != 0 {
                let op = PauliString::z_op(n, k);
                sp.apply_pauli(&op)?;
                dn.apply_pauli(&op)?;
            }
            Ok(branch)
        }
        Channel::AmplitudeDamping(g) => {
            if g == 0.0 {
                return Ok(0);
            }
            let s = (1.0 - g).sqrt();
            let a = (1.0 + s) / 2.0;
            let b = (1.0 - s) / 2.0;
            let z = dn.expectation_pauli(&PauliString::z_op(n, k))?;
            let p0 = (a * a + b * b + 2.0 * a * b * z).clamp(0.0, 1.0);
            let terms: [(Complex<f64>, PauliString); 2];
            let branch = if rng.gen::<f64>() < p0 {
                terms = [
                    (Complex::new(a, 0.0), PauliString::identity(n)),
                    (Complex::new(b, 0.0), PauliString::z_op(n, k)),
                ];
                0
            } else {
                let half_rt = g.sqrt() / 2.0;
                terms = [
                    (Complex::new(half_rt, 0.0), PauliString::x_op(n, k)),
                    (Complex::new(0.0, half_rt), PauliString::y_op(n, k)),
                ];
                1
            };
            sp.apply_pauli_sum(&terms, true)?;
            dn.apply_pauli_sum(&terms, true)?;
            Ok(branch)
        }
        Channel::CoherentZ(t) => {
            let terms = rz_terms(n, k, t);
            sp.apply_pauli_sum(&terms, false)?;
            dn.apply_pauli_sum(&terms, false)?;
            Ok(0)
        }
    }
}

/// What one lockstep run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct LockstepOutcome {
    /// `|<dense|sparse>|` after the final step.
    pub overlap: f64,
    /// Largest gap between the two sides' Born probabilities at any
    /// measurement.
    pub prob_gap: f64,
    /// Largest sparse-map size reached.
    pub max_entries: usize,
    /// Recorded stochastic decisions as (step index, branch).
    pub choices: Vec<(usize, u8)>,
}

/// Run `steps` on both representations from |0...0>, replaying every sampled
/// decision on the dense side.
pub fn run_lockstep<R: Rng + ?Sized>(
    n: usize,
    steps: &[Step],
    rng: &mut R,
) -> Result<LockstepOutcome> {
    let mut sp = PfsrState::<f64>::new(n)?;
    let mut dn = DenseState::<f64>::new(n)?;
    let mut choices = Vec::new();
    let mut prob_gap = 0.0f64;
    let mut max_entries = sp.num_entries();
    for (i, step) in steps.iter().enumerate() {
        match step {
            Step::Clifford(g) => {
                sp.apply_gate(g)?;
                dn.apply_gate(g)?;
            }
            Step::Rz(k, theta) => {
                let terms = rz_terms(n, *k, *theta);
                sp.apply_pauli_sum(&terms, false)?;
                dn.apply_pauli_sum(&terms, false)?;
            }
            Step::Measure(k, x_basis) => {
                let p = if *x_basis {
                    PauliString::x_op(n, *k)
                } else {
                    PauliString::z_op(n, *k)
                };
                let out = sp.measure_pauli(&p, rng, None)?;
                let replay = dn.measure_pauli(&p, rng, Some(out.value))?;
                prob_gap = prob_gap.max((out.probability - replay.probability).abs());
                choices.push((i, u8::from(out.value == -1)));
            }
            Step::Noise(k, ch) => {
                choices.push((i, apply_channel_lockstep(&mut sp, &mut dn, *k, ch, rng)?));
            }
        }
        max_entries = max_entries.max(sp.num_entries());
    }
    let v = sp.to_dense()?;
    let overlap = fidelity(&v, dn.vector()).sqrt();
    Ok(LockstepOutcome {
        overlap,
        prob_gap,
        max_entries,
        choices,
    })
}

/// Aggregate over a suite of random circuits.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub circuits: usize,
    pub worst_overlap: f64,
    pub mean_overlap: f64,
    pub worst_prob_gap: f64,
    pub max_entries: usize,
    /// Total stochastic decisions replayed.
    pub decisions: u64,
    /// Circuit index attaining `worst_overlap`, for targeted reruns.
    pub worst_circuit: u64,
}

/// Run `circuits` random circuits with `2..=max_qubits` qubits and
/// `1..=max_depth` steps each. Deterministic in all arguments; each circuit
/// owns stream (`master_seed`, [`ORACLE_STREAM`], index).
pub fn run_oracle_suite(
    circuits: usize,
    max_qubits: usize,
    max_depth: usize,
    master_seed: u64,
) -> Result<OracleReport> {
    let cap = oracle_cap();
    if max_qubits > cap {
        return Err(PfsrError::OracleCapExceeded {
            qubits: max_qubits,
            cap,
        });
    }
    if circuits == 0 || max_qubits < 2 || max_depth == 0 {
        return Err(PfsrError::InvalidParameter(
            "oracle suite needs circuits >= 1, max_qubits >= 2, max_depth >= 1".into(),
        ));
    }
    let mut report = OracleReport {
        circuits,
        worst_overlap: f64::INFINITY,
        mean_overlap: 0.0,
        worst_prob_gap: 0.0,
        max_entries: 0,
        decisions: 0,
        worst_circuit: 0,
    };
    for i in 0..circuits {
        let mut rng = trajectory_rng(master_seed, ORACLE_STREAM, i as u64);
        let n = rng.gen_range(2..=max_qubits);
        let depth = rng.gen_range(1..=max_depth);
        let steps = random_circuit(n, depth, &mut rng);
        let out = run_lockstep(n, &steps, &mut rng)?;
        if out.overlap < report.worst_overlap {
            report.worst_overlap = out.overlap;
            report.worst_circuit = i as u64;
        }
        report.mean_overlap += out.overlap;
        report.worst_prob_gap = report.worst_prob_gap.max(out.prob_gap);
        report.max_entries = report.max_entries.max(out.max_entries);
        report.decisions += out.choices.len() as u64;
    }
    report.mean_overlap /= circuits as f64;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn suite_agrees_and_is_deterministic() {
        let a = run_oracle_suite(60, 5, 30, 11).unwrap();
        let b = run_oracle_suite(60, 5, 30, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.worst_overlap >= 1.0 - 1e-8, "worst {}", a.worst_overlap);
        assert!(a.worst_prob_gap <= 1e-9, "gap {}", a.worst_prob_gap);
        assert!(a.decisions > 0);
        assert!(a.max_entries > 1, "suite never left the stabilizer world");
    }

    #[test]
    fn generator_emits_every_step_kind() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let steps = random_circuit(4, 400, &mut rng);
        let mut seen = [false; 4];
        for s in &steps {
            seen[match s {
                Step::Clifford(_) => 0,
                Step::Rz(..) => 1,
                Step::Measure(..) => 2,
                Step::Noise(..) => 3,
            }] = true;
        }
        assert_eq!(seen, [true; 4]);
        for s in &steps {
            if let Step::Clifford(Gate::Cnot(c, t)) = s {
                assert_ne!(c, t);
            }
        }
    }

    #[test]
    fn lockstep_flags_a_diverged_pair() {
        // Drop one gate from the sparse side by hand and confirm the overlap
        // check would catch it.
        let n = 2;
        let mut sp = PfsrState::<f64>::new(n).unwrap();
        let mut dn = DenseState::<f64>::new(n).unwrap();
        sp.apply_gate(&Gate::H(0)).unwrap();
        dn.apply_gate(&Gate::H(0)).unwrap();
        dn.apply_gate(&Gate::Cnot(0, 1)).unwrap();
        let v = sp.to_dense().unwrap();
        assert!(fidelity(&v, dn.vector()).sqrt() < 0.8);
    }

    #[test]
    fn qubit_cap_is_enforced() {
        let cap = oracle_cap();
        let err = run_oracle_suite(1, cap + 1, 5, 0).unwrap_err();
        assert!(matches!(err, PfsrError::OracleCapExceeded { .. }));
    }
}
