//! Single-qubit noise channels and the policies that realize them.
//!
//! Three channel families cover the experiment space: depolarizing (Pauli),
//! amplitude damping (non-Pauli Kraus), and a coherent Z over-rotation
//! (non-Pauli unitary); plain bit and phase flips round out the Pauli cases.
//! Each can be realized three ways:
//!
//! * **exact**: trajectory unravelling of the true channel. Kraus branches
//!   are drawn with their Born probabilities (one `<Z>` evaluation for the
//!   damping channel) and applied as renormalized Pauli sums, so the state
//!   stays faithful to the non-Pauli physics.
//! * **Pauli twirl**: the channel's Pauli transfer matrix is diagonalized by
//!   twirling and the resulting Pauli channel is sampled. This is the
//!   stabilizer-friendly approximation whose bias the exact runs expose.
//! * **quasiprobability**: the channel is written as a signed mixture of
//!   stabilizer operations (identity, Z, and reset or phase gate); branches
//!   are drawn proportionally to `|q_i|` and the trajectory weight picks up
//!   `sign(q_i) * sum|q_j|`, giving unbiased estimates at the cost of
//!   variance growth.
//!
//! Classical bit flips on resets and measurements use the channel-equivalent
//! rate so that every fault location in a schedule is governed by one
//! parameter.

use num_complex::Complex;
use rand::Rng;

use crate::pauli::PauliString;
use crate::scalar::Scalar;
use crate::state::PfsrState;
use crate::{PfsrError, Result};

/// Single-qubit noise channel with its strength parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    /// Uniform X/Y/Z error with total probability `p`.
    Depolarizing(f64),
    /// X error with probability `p`.
    BitFlip(f64),
    /// Z error with probability `p`.
    PhaseFlip(f64),
    /// Amplitude damping toward `|0>` with decay probability `gamma`.
    AmplitudeDamping(f64),
    /// Unitary over-rotation `R_Z(theta) = exp(-i theta Z / 2)`,
    /// `theta` in `(-pi, pi]`.
    CoherentZ(f64),
}

/// How a channel is realized on a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Realization {
    Exact,
    Pta,
    Quasiprob,
}

impl Channel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Channel::Depolarizing(p) | Channel::BitFlip(p) | Channel::PhaseFlip(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(PfsrError::InvalidParameter(format!(
                        "error probability {p} outside [0, 1]"
                    )));
                }
            }
            Channel::AmplitudeDamping(g) => {
                if !(0.0..=1.0).contains(&g) {
                    return Err(PfsrError::InvalidParameter(format!(
                        "damping rate {g} outside [0, 1]"
                    )));
                }
            }
            Channel::CoherentZ(t) => {
                if !t.is_finite() || t <= -std::f64::consts::PI || t > std::f64::consts::PI {
                    return Err(PfsrError::InvalidParameter(format!(
                        "rotation angle {t} outside (-pi, pi]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Strength parameter as given.
    pub fn parameter(&self) -> f64 {
        match *self {
            Channel::Depolarizing(p) | Channel::BitFlip(p) | Channel::PhaseFlip(p) => p,
            Channel::AmplitudeDamping(g) => g,
            Channel::CoherentZ(t) => t,
        }
    }

    /// Comparable strength for grids and plot axes: the probability
    /// parameter itself, except coherent rotations report their twirled
    /// flip probability sin^2(theta/2) rather than the angle.
    pub fn strength(&self) -> f64 {
        match *self {
            Channel::CoherentZ(t) => (t / 2.0).sin().powi(2),
            other => other.parameter(),
        }
    }

    /// Same channel family at the given comparable strength; inverts
    /// [`Channel::strength`], so coherent rotations get θ = 2·asin(√v).
    pub fn with_strength(&self, v: f64) -> Result<Channel> {
        let ch = match *self {
            Channel::CoherentZ(_) => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(PfsrError::InvalidParameter(format!(
                        "coherent strength {v} outside [0, 1]"
                    )));
                }
                Channel::CoherentZ(2.0 * v.sqrt().asin())
            }
            other => other.with_parameter(v),
        };
        ch.validate()?;
        Ok(ch)
    }

    /// Stable lower-snake identifier used in configs and result files.
    pub fn name(&self) -> &'static str {
        match self {
            Channel::Depolarizing(_) => "depolarizing",
            Channel::BitFlip(_) => "bit_flip",
            Channel::PhaseFlip(_) => "phase_flip",
            Channel::AmplitudeDamping(_) => "amplitude_damping",
            Channel::CoherentZ(_) => "coherent_z",
        }
    }

    /// Same channel family with a different strength.
    pub fn with_parameter(&self, v: f64) -> Channel {
        match *self {
            Channel::Depolarizing(_) => Channel::Depolarizing(v),
            Channel::BitFlip(_) => Channel::BitFlip(v),
            Channel::PhaseFlip(_) => Channel::PhaseFlip(v),
            Channel::AmplitudeDamping(_) => Channel::AmplitudeDamping(v),
            Channel::CoherentZ(_) => Channel::CoherentZ(v),
        }
    }

    /// Probabilities `[p_I, p_X, p_Y, p_Z]` of the Pauli-twirled channel.
    pub fn pta_probabilities(&self) -> [f64; 4] {
        match *self {
            Channel::Depolarizing(p) => [1.0 - p, p / 3.0, p / 3.0, p / 3.0],
            Channel::BitFlip(p) => [1.0 - p, p, 0.0, 0.0],
            Channel::PhaseFlip(p) => [1.0 - p, 0.0, 0.0, p],
            Channel::AmplitudeDamping(g) => {
                let s = (1.0 - g).sqrt();
                let px = g / 4.0;
                let pz = (1.0 - s) / 2.0 - g / 4.0;
                [1.0 - 2.0 * px - pz, px, px, pz]
            }
            Channel::CoherentZ(t) => {
                let pz = (t / 2.0).sin().powi(2);
                [1.0 - pz, 0.0, 0.0, pz]
            }
        }
    }

    /// Total error probability of the twirled channel.
    pub fn fault_probability(&self) -> f64 {
        let [pi, _, _, _] = self.pta_probabilities();
        1.0 - pi
    }

    /// Channel-equivalent classical flip rate for resets and measurements:
    /// the probability of the channel's error event on a maximally mixed
    /// input. For the Pauli channels that is the flip probability itself;
    /// for damping it is the jump probability tr(K1 (I/2) K1') = gamma/2;
    /// for the coherent rotation it is the twirled phase-flip probability.
    pub fn flip_rate(&self) -> f64 {
        match *self {
            Channel::Depolarizing(p) | Channel::BitFlip(p) | Channel::PhaseFlip(p) => p,
            Channel::AmplitudeDamping(g) => g / 2.0,
            Channel::CoherentZ(t) => (t / 2.0).sin().powi(2),
        }
    }

    /// Whether the two qubits of an entangling gate share one correlated
    /// noise event. True for depolarizing, whose standard circuit-level form
    /// draws one of the fifteen nontrivial two-qubit Paulis with total
    /// probability `p`; the other families act on each qubit independently.
    pub fn pair_correlated(&self) -> bool {
        matches!(self, Channel::Depolarizing(_))
    }

    /// Signed stabilizer-operation decomposition `[(q, op); 3]` used by the
    /// quasiprobability realization.
    fn quasi_terms(&self) -> Result<[(f64, QuasiOp); 3]> {
        match *self {
            Channel::AmplitudeDamping(g) => {
                let s = (1.0 - g).sqrt();
                Ok([
                    (((1.0 - g) + s) / 2.0, QuasiOp::Identity),
                    (((1.0 - g) - s) / 2.0, QuasiOp::Z),
                    (g, QuasiOp::Reset),
                ])
            }
            Channel::CoherentZ(t) => {
                let (si, co) = t.sin_cos();
                Ok([
                    ((1.0 + co - si) / 2.0, QuasiOp::Identity),
                    ((1.0 - co - si) / 2.0, QuasiOp::Z),
                    (si, QuasiOp::PhaseGate),
                ])
            }
            Channel::Depolarizing(p) => Ok([
                (1.0 - p, QuasiOp::Identity),
                (p, QuasiOp::UniformPauli),
                (0.0, QuasiOp::Z),
            ]),
            Channel::BitFlip(p) => Ok([
                (1.0 - p, QuasiOp::Identity),
                (p, QuasiOp::X),
                (0.0, QuasiOp::Z),
            ]),
            Channel::PhaseFlip(p) => Ok([
                (1.0 - p, QuasiOp::Identity),
                (p, QuasiOp::Z),
                (0.0, QuasiOp::X),
            ]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum QuasiOp {
    Identity,
    X,
    Z,
    Reset,
    PhaseGate,
    UniformPauli,
}

fn single_pauli(n: usize, k: usize, which: u8) -> PauliString {
    match which {
        1 => PauliString::x_op(n, k),
        2 => PauliString::y_op(n, k),
        _ => PauliString::z_op(n, k),
    }
}

/// Exact trajectory unravelling of the channel on qubit `k`.
pub fn apply_exact<T: Scalar, R: Rng + ?Sized>(
    st: &mut PfsrState<T>,
    k: usize,
    ch: &Channel,
    rng: &mut R,
) -> Result<()> {
    let n = st.num_qubits();
    match *ch {
        Channel::Depolarizing(p) => {
            if rng.gen::<f64>() < p {
                let which = rng.gen_range(1..=3u8);
                st.apply_pauli(&single_pauli(n, k, which))?;
            }
            Ok(())
        }
        Channel::BitFlip(p) => {
            if rng.gen::<f64>() < p {
                st.apply_pauli(&PauliString::x_op(n, k))?;
            }
            Ok(())
        }
        Channel::PhaseFlip(p) => {
            if rng.gen::<f64>() < p {
                st.apply_pauli(&PauliString::z_op(n, k))?;
            }
            Ok(())
        }
        Channel::AmplitudeDamping(g) => {
            if g == 0.0 {
                return Ok(());
            }
            let s = (1.0 - g).sqrt();
            let a = (1.0 + s) / 2.0;
            let b = (1.0 - s) / 2.0;
            let z_exp = st.expectation_pauli(&PauliString::z_op(n, k))?.as_f64();
            let p0 = (a * a + b * b) + 2.0 * a * b * z_exp;
            // A Born weight outside [0, 1] beyond rounding means the state
            // itself has drifted.
            if !(-1e-9..=1.0 + 1e-9).contains(&p0) {
                return Err(PfsrError::NormDrift { norm: p0 });
            }
            let p0 = p0.clamp(0.0, 1.0);
            if rng.gen::<f64>() < p0 {
                let terms = vec![
                    (
                        Complex::new(T::from_f64_lossy(a), T::zero()),
                        PauliString::identity(n),
                    ),
                    (
                        Complex::new(T::from_f64_lossy(b), T::zero()),
                        PauliString::z_op(n, k),
                    ),
                ];
                st.apply_pauli_sum(&terms, true)
            } else {
                let half_rt = g.sqrt() / 2.0;
                let terms = vec![
                    (
                        Complex::new(T::from_f64_lossy(half_rt), T::zero()),
                        PauliString::x_op(n, k),
                    ),
                    (
                        Complex::new(T::zero(), T::from_f64_lossy(half_rt)),
                        PauliString::y_op(n, k),
                    ),
                ];
                st.apply_pauli_sum(&terms, true)
            }
        }
        Channel::CoherentZ(t) => {
            if t == 0.0 {
                return Ok(());
            }
            let half = t / 2.0;
            let terms = vec![
                (
                    Complex::new(T::from_f64_lossy(half.cos()), T::zero()),
                    PauliString::identity(n),
                ),
                (
                    Complex::new(T::zero(), T::from_f64_lossy(-half.sin())),
                    PauliString::z_op(n, k),
                ),
            ];
            st.apply_pauli_sum(&terms, false)
        }
    }
}

/// Two-qubit Pauli on `(a, b)` with components encoded I/X/Y/Z as 0..=3.
fn pair_pauli(n: usize, a: usize, wa: u8, b: usize, wb: u8) -> PauliString {
    let mut p = PauliString::identity(n);
    if wa != 0 {
        p = p.multiply(&single_pauli(n, a, wa));
    }
    if wb != 0 {
        p = p.multiply(&single_pauli(n, b, wb));
    }
    p
}

/// Correlated noise event shared by the two qubits of an entangling gate:
/// with the channel's total fault probability, one of the fifteen nontrivial
/// two-qubit Paulis is drawn uniformly and applied. Defined only for the
/// [`Channel::pair_correlated`] families.
pub fn apply_exact_pair<T: Scalar, R: Rng + ?Sized>(
    st: &mut PfsrState<T>,
    a: usize,
    b: usize,
    ch: &Channel,
    rng: &mut R,
) -> Result<()> {
    match *ch {
        Channel::Depolarizing(p) => {
            if rng.gen::<f64>() < p {
                let which = rng.gen_range(1..16u8);
                let n = st.num_qubits();
                st.apply_pauli(&pair_pauli(n, a, which >> 2, b, which & 3))?;
            }
            Ok(())
        }
        _ => Err(PfsrError::InvalidParameter(format!(
            "channel {} has no correlated two-qubit form",
            ch.name()
        ))),
    }
}

/// Pauli-twirled realization: sample one of I/X/Y/Z from the twirl weights.
pub fn apply_pta<T: Scalar, R: Rng + ?Sized>(
    st: &mut PfsrState<T>,
    k: usize,
    ch: &Channel,
    rng: &mut R,
) -> Result<()> {
    let probs = ch.pta_probabilities();
    let mut u = rng.gen::<f64>();
    for (which, p) in probs.iter().enumerate().skip(1) {
        u -= p;
        if u < 0.0 {
            st.apply_pauli(&single_pauli(st.num_qubits(), k, which as u8))?;
            return Ok(());
        }
    }
    Ok(())
}

/// Quasiprobability realization; returns the signed weight factor the
/// trajectory estimate must be multiplied by.
pub fn apply_quasiprob<T: Scalar, R: Rng + ?Sized>(
    st: &mut PfsrState<T>,
    k: usize,
    ch: &Channel,
    rng: &mut R,
) -> Result<f64> {
    let terms = ch.quasi_terms()?;
    let total: f64 = terms.iter().map(|(q, _)| q.abs()).sum();
    let mut u = rng.gen::<f64>() * total;
    let mut chosen = terms[terms.len() - 1];
    for t in terms {
        u -= t.0.abs();
        if u < 0.0 {
            chosen = t;
            break;
        }
    }
    let (q, op) = chosen;
    let n = st.num_qubits();
    match op {
        QuasiOp::Identity => {}
        QuasiOp::X => st.apply_pauli(&PauliString::x_op(n, k))?,
        QuasiOp::Z => st.apply_pauli(&PauliString::z_op(n, k))?,
        QuasiOp::PhaseGate => st.apply_gate(&crate::tableau::Gate::S(k))?,
        QuasiOp::Reset => {
            let out = st.measure_pauli(&PauliString::z_op(n, k), rng, None)?;
            if out.value == -1 {
                st.apply_pauli(&PauliString::x_op(n, k))?;
            }
        }
        QuasiOp::UniformPauli => {
            let which = rng.gen_range(1..=3u8);
            st.apply_pauli(&single_pauli(n, k, which))?;
        }
    }
    Ok(q.signum() * total)
}

/// Policy that decides what happens at each fault location of a schedule.
///
/// The schedule walker assigns consecutive site indices to channel locations
/// and classical flip locations in a fixed traversal order; drivers key all
/// decisions off those indices, which is what makes fault injection and
/// counting line up with sampling runs.
pub trait NoiseDriver<T: Scalar> {
    /// Act on the state at channel site `site` touching `qubit`.
    fn apply_channel<R: Rng + ?Sized>(
        &mut self,
        site: usize,
        st: &mut PfsrState<T>,
        qubit: usize,
        ch: &Channel,
        rng: &mut R,
    ) -> Result<()>;

    /// Act on the state at a correlated two-qubit site (one site index for
    /// the pair). Reached only for [`Channel::pair_correlated`] channels.
    fn apply_pair<R: Rng + ?Sized>(
        &mut self,
        site: usize,
        st: &mut PfsrState<T>,
        a: usize,
        b: usize,
        ch: &Channel,
        rng: &mut R,
    ) -> Result<()>;

    /// Classical flip decision at flip site `site`.
    fn sample_flip<R: Rng + ?Sized>(&mut self, site: usize, ch: &Channel, rng: &mut R) -> bool;

    /// Accumulated trajectory weight (1 unless quasiprobabilistic).
    fn weight(&self) -> f64 {
        1.0
    }
}

/// Exact channels, Born-rule flips.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactDriver;

impl<T: Scalar> NoiseDriver<T> for ExactDriver {
    fn apply_channel<R: Rng + ?Sized>(
        &mut self,
        _site: usize,
        st: &mut PfsrState<T>,
        qubit: usize,
        ch: &Channel,
        rng: &mut R,
    ) -> Result<()> {
        apply_exact(st, qubit, ch, rng)
    }

    fn apply_pair<R: Rng + ?Sized>(
        &mut self,
        _site: usize,
        st: &mut PfsrState<T>,
        a: usize,
        b: usize,
        ch: &Channel,
        rng: &mut R,
    ) -> Result<()> {
        apply_exact_pair(st, a, b, ch, rng)
    }

    fn sample_flip<R: Rng + ?Sized>(&mut self, _site: usize, ch: &Channel, rng: &mut R) -> bool {
        rng.gen::<f64>() < ch.flip_rate()
    }
}

/// Pauli-twirled channels, same flip rates.
#[derive(Debug, Clone, Copy, Default)]
pub struct PtaDriver;

impl<T: Scalar> NoiseDriver<T> for PtaDriver {
    fn apply_channel<R: Rng + ?Sized>(
        &mut self,
        _site: usize,
        st: &mut PfsrState<T>,
        qubit: usize,
        ch: &Channel,
        rng: &mut R,
    ) -> Result<()> {
        apply_pta(st, qubit, ch, rng)
    }

    fn apply_pair<R: Rng + ?Sized>(
        &mut self,
        _site: usize,
        st: &mut PfsrState<T>,
        a: usize,
        b: usize,
        ch: &Channel,
        rng: &mut R,
    ) -> Result<()> {
        // The correlated families are already Pauli channels, their own twirl.
        apply_exact_pair(st, a, b, ch, rng)
    }

    fn sample_flip<R: Rng + ?Sized>(&mut self, _site: usize, ch: &Channel, rng: &mut R) -> bool {
        rng.gen::<f64>() < ch.flip_rate()
    }
}

/// Quasiprobability channels; the signed weight accumulates multiplicatively.
#[derive(Debug, Clone, Copy)]
pub struct QuasiDriver {
    pub weight: f64,
}

impl Default for QuasiDriver {
    fn default() -> Self {
        QuasiDriver { weight: 1.0 }
    }
}

impl<T: Scalar> NoiseDriver<T> for QuasiDriver {
    fn apply_channel<R: Rng + ?Sized>(
        &mut self,
        _site: usize,
        st: &mut PfsrState<T>,
        qubit: usize,
        ch: &Channel,
        rng: &mut R,
    ) -> Result<()> {
        self.weight *= apply_quasiprob(st, qubit, ch, rng)?;
        Ok(())
    }

    fn apply_pair<R: Rng + ?Sized>(
        &mut self,
        _site: usize,
        st: &mut PfsrState<T>,
        a: usize,
        b: usize,
        ch: &Channel,
        rng: &mut R,
    ) -> Result<()> {
        // Correlated sites are stochastic Pauli events: weight-neutral.
        apply_exact_pair(st, a, b, ch, rng)
    }

    fn sample_flip<R: Rng + ?Sized>(&mut self, _site: usize, ch: &Channel, rng: &mut R) -> bool {
        rng.gen::<f64>() < ch.flip_rate()
    }

    fn weight(&self) -> f64 {
        self.weight
    }
}

/// What kind of fault a site hosts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteKind {
    Channel,
    /// Correlated two-qubit channel site (one event for the gate's pair).
    PairChannel,
    Flip,
}

/// Dry-run driver that records the site layout without touching the state.
#[derive(Debug, Clone, Default)]
pub struct CountingDriver {
    pub kinds: Vec<SiteKind>,
}

impl CountingDriver {
    pub fn num_sites(&self) -> usize {
        self.kinds.len()
    }

    fn record(&mut self, site: usize, kind: SiteKind) {
        debug_assert_eq!(site, self.kinds.len(), "sites must be visited in order");
        self.kinds.push(kind);
    }
}

impl<T: Scalar> NoiseDriver<T> for CountingDriver {
    fn apply_channel<R: Rng + ?Sized>(
        &mut self,
        site: usize,
        _st: &mut PfsrState<T>,
        _qubit: usize,
        _ch: &Channel,
        _rng: &mut R,
    ) -> Result<()> {
        self.record(site, SiteKind::Channel);
        Ok(())
    }

    fn apply_pair<R: Rng + ?Sized>(
        &mut self,
        site: usize,
        _st: &mut PfsrState<T>,
        _a: usize,
        _b: usize,
        _ch: &Channel,
        _rng: &mut R,
    ) -> Result<()> {
        self.record(site, SiteKind::PairChannel);
        Ok(())
    }

    fn sample_flip<R: Rng + ?Sized>(&mut self, site: usize, _ch: &Channel, _rng: &mut R) -> bool {
        self.record(site, SiteKind::Flip);
        false
    }
}

/// Deterministic fault pattern for one site subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultAction {
    PauliX,
    PauliY,
    PauliZ,
    /// Two-qubit Pauli at a pair site, components encoded I/X/Y/Z as 0..=3
    /// on the gate's (first, second) qubit; not both identity.
    PauliPair(u8, u8),
    Flip,
}

/// Driver that injects a fixed set of faults and nothing else.
#[derive(Debug, Clone, Default)]
pub struct InjectedDriver {
    pub faults: std::collections::BTreeMap<usize, FaultAction>,
}

impl<T: Scalar> NoiseDriver<T> for InjectedDriver {
    fn apply_channel<R: Rng + ?Sized>(
        &mut self,
        site: usize,
        st: &mut PfsrState<T>,
        qubit: usize,
        _ch: &Channel,
        _rng: &mut R,
    ) -> Result<()> {
        let n = st.num_qubits();
        match self.faults.get(&site) {
            None => Ok(()),
            Some(FaultAction::PauliX) => st.apply_pauli(&single_pauli(n, qubit, 1)),
            Some(FaultAction::PauliY) => st.apply_pauli(&single_pauli(n, qubit, 2)),
            Some(FaultAction::PauliZ) => st.apply_pauli(&single_pauli(n, qubit, 3)),
            Some(FaultAction::PauliPair(_, _) | FaultAction::Flip) => {
                Err(PfsrError::InvalidParameter(format!(
                    "fault at channel site {site} is not a single-qubit Pauli"
                )))
            }
        }
    }

    fn apply_pair<R: Rng + ?Sized>(
        &mut self,
        site: usize,
        st: &mut PfsrState<T>,
        a: usize,
        b: usize,
        _ch: &Channel,
        _rng: &mut R,
    ) -> Result<()> {
        let n = st.num_qubits();
        match self.faults.get(&site) {
            None => Ok(()),
            Some(&FaultAction::PauliPair(wa, wb)) => {
                st.apply_pauli(&pair_pauli(n, a, wa, b, wb))
            }
            Some(_) => Err(PfsrError::InvalidParameter(format!(
                "fault at pair site {site} is not a two-qubit Pauli"
            ))),
        }
    }

    fn sample_flip<R: Rng + ?Sized>(&mut self, site: usize, _ch: &Channel, _rng: &mut R) -> bool {
        matches!(self.faults.get(&site), Some(FaultAction::Flip))
    }
}
