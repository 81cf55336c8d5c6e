//! Dense statevector simulation, used as an independent cross-check.
//!
//! Everything here works directly on `2^n` amplitude vectors with bit
//! arithmetic; none of the sparse-frame machinery is involved. Qubit `k`
//! occupies index bit `n-1-k`, so qubit 0 is the most significant bit and
//! basis index order matches the textual order of Pauli and ket literals.
//!
//! [`PfsrState::to_dense`] bridges the two worlds. Its output is normalized
//! with a canonical reference phase (the joint +1 eigenstate built by
//! projecting the first surviving computational seed, whose component stays
//! real positive), so comparisons against an independently evolved
//! [`DenseState`] should use fidelity rather than componentwise equality
//! whenever the frame has left the computational basis.

use num_complex::Complex;
use rand::Rng;

use crate::pauli::PauliString;
use crate::scalar::{norm_sqr, Scalar};
use crate::state::{MeasurementOutcome, PfsrState, POSTSELECT_EPS};
use crate::tableau::Gate;
use crate::{PfsrError, Result};

/// Default cap on dense conversions, overridable via `PFSR_ORACLE_MAX_QUBITS`.
pub const DEFAULT_ORACLE_MAX_QUBITS: usize = 12;

/// Qubit cap for dense conversions from the environment.
pub fn oracle_cap() -> usize {
    oracle_cap_from(std::env::var("PFSR_ORACLE_MAX_QUBITS").ok().as_deref())
}

fn oracle_cap_from(var: Option<&str>) -> usize {
    var.and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ORACLE_MAX_QUBITS)
}

/// Apply a Pauli string to a dense vector: `|j> -> i^q (-1)^{z.(j^x)} |j^x>`.
fn apply_pauli_vec<T: Scalar>(p: &PauliString, v: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = p.num_qubits();
    let dim = 1usize << n;
    debug_assert_eq!(v.len(), dim);
    let mut x_mask = 0usize;
    let mut z_mask = 0usize;
    for k in 0..n {
        if p.x_bit(k) {
            x_mask |= 1 << (n - 1 - k);
        }
        if p.z_bit(k) {
            z_mask |= 1 << (n - 1 - k);
        }
    }
    let phase: Complex<T> = match p.phase() {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    };
    let mut out = vec![Complex::new(T::zero(), T::zero()); dim];
    for j in 0..dim {
        let tgt = j ^ x_mask;
        let mut amp = phase * v[j];
        if (tgt & z_mask).count_ones() & 1 == 1 {
            amp = -amp;
        }
        out[tgt] = amp;
    }
    out
}

/// Joint +1 eigenstate of a frame, canonical reference phase.
///
/// Seeds the projector `prod (1+S_i)/2` with the first computational basis
/// vector (lexicographic order) that survives projection; the seed's own
/// component `<c| Pi |c> = |Pi |c>|^2` is then real positive, which fixes the
/// phase deterministically.
fn frame_reference<T: Scalar>(frame: &[PauliString]) -> Result<Vec<Complex<T>>> {
    let n = frame.len();
    let dim = 1usize << n;
    let project = |c: usize| -> Vec<Complex<T>> {
        let mut v = vec![Complex::new(T::zero(), T::zero()); dim];
        v[c] = Complex::new(T::one(), T::zero());
        let half = T::from_f64_lossy(0.5);
        for s in frame {
            let sv = apply_pauli_vec(s, &v);
            for (a, b) in v.iter_mut().zip(sv) {
                *a = (*a + b) * half;
            }
            if v.iter().map(|z| norm_sqr(*z)).fold(T::zero(), |a, b| a + b).as_f64() < 1e-12 {
                break;
            }
        }
        v
    };
    for c in 0..dim {
        let mut v = project(c);
        let w = v
            .iter()
            .map(|z| norm_sqr(*z))
            .fold(T::zero(), |a, b| a + b);
        // Surviving weights are dyadic rationals >= 2^-n, dead seeds cancel
        // exactly, so any mid-range cutoff separates them.
        if w.as_f64() < 1e-9 {
            continue;
        }
        let norm = w.sqrt();
        for z in v.iter_mut() {
            *z = *z / norm;
        }
        return Ok(v);
    }
    Err(PfsrError::BadGenerators)
}

impl<T: Scalar> PfsrState<T> {
    /// Expand the sparse state to a dense vector.
    ///
    /// Fails with [`PfsrError::OracleCapExceeded`] beyond the cap from
    /// `PFSR_ORACLE_MAX_QUBITS` (default 12).
    pub fn to_dense(&self) -> Result<Vec<Complex<T>>> {
        let cap = oracle_cap();
        let n = self.num_qubits();
        if n > cap {
            return Err(PfsrError::OracleCapExceeded { qubits: n, cap });
        }
        if self.pending_clifford().is_some() {
            let mut flushed = self.clone();
            flushed.flush_relabel()?;
            return flushed.to_dense();
        }
        let reference = frame_reference::<T>(self.frame())?;
        let dim = 1usize << n;
        let mut out = vec![Complex::new(T::zero(), T::zero()); dim];
        for (_, e) in self.entries() {
            let term = apply_pauli_vec(&e.history, &reference);
            for (a, b) in out.iter_mut().zip(term) {
                *a = *a + e.amp * b;
            }
        }
        Ok(out)
    }
}

/// Plain statevector simulator.
#[derive(Debug, Clone)]
pub struct DenseState<T: Scalar> {
    n: usize,
    vec: Vec<Complex<T>>,
}

impl<T: Scalar> DenseState<T> {
    /// `|0...0>`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(PfsrError::EmptyState);
        }
        let mut vec = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        vec[0] = Complex::new(T::one(), T::zero());
        Ok(DenseState { n, vec })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn vector(&self) -> &[Complex<T>] {
        &self.vec
    }

    pub fn norm_sqr(&self) -> T {
        self.vec
            .iter()
            .map(|z| norm_sqr(*z))
            .fold(T::zero(), |a, b| a + b)
    }

    fn check_qubit(&self, k: usize) -> Result<()> {
        if k >= self.n {
            return Err(PfsrError::InvalidParameter(format!(
                "qubit {k} out of range for {} qubits",
                self.n
            )));
        }
        Ok(())
    }

    /// Apply a single-qubit matrix `[[m00, m01], [m10, m11]]` on qubit `k`.
    pub fn apply_1q(&mut self, k: usize, m: [Complex<T>; 4]) -> Result<()> {
        self.check_qubit(k)?;
        let bit = 1usize << (self.n - 1 - k);
        for j in 0..self.vec.len() {
            if j & bit == 0 {
                let a = self.vec[j];
                let b = self.vec[j | bit];
                self.vec[j] = m[0] * a + m[1] * b;
                self.vec[j | bit] = m[2] * a + m[3] * b;
            }
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        let zero = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        let i = Complex::new(T::zero(), T::one());
        let h = Complex::new(T::from_f64_lossy(std::f64::consts::FRAC_1_SQRT_2), T::zero());
        match *g {
            Gate::H(k) => self.apply_1q(k, [h, h, h, -h]),
            Gate::S(k) => self.apply_1q(k, [one, zero, zero, i]),
            Gate::Sdg(k) => self.apply_1q(k, [one, zero, zero, -i]),
            Gate::X(k) => self.apply_1q(k, [zero, one, one, zero]),
            Gate::Y(k) => self.apply_1q(k, [zero, -i, i, zero]),
            Gate::Z(k) => self.apply_1q(k, [one, zero, zero, -one]),
            Gate::Cnot(c, t) => {
                self.check_qubit(c)?;
                self.check_qubit(t)?;
                if c == t {
                    return Err(PfsrError::InvalidParameter(
                        "controlled gate addresses one qubit twice".into(),
                    ));
                }
                let cb = 1usize << (self.n - 1 - c);
                let tb = 1usize << (self.n - 1 - t);
                for j in 0..self.vec.len() {
                    if j & cb != 0 && j & tb == 0 {
                        self.vec.swap(j, j | tb);
                    }
                }
                Ok(())
            }
            Gate::Cz(a, b) => {
                self.check_qubit(a)?;
                self.check_qubit(b)?;
                if a == b {
                    return Err(PfsrError::InvalidParameter(
                        "controlled gate addresses one qubit twice".into(),
                    ));
                }
                let ab = 1usize << (self.n - 1 - a);
                let bb = 1usize << (self.n - 1 - b);
                for j in 0..self.vec.len() {
                    if j & ab != 0 && j & bb != 0 {
                        self.vec[j] = -self.vec[j];
                    }
                }
                Ok(())
            }
            Gate::Swap(a, b) => {
                self.check_qubit(a)?;
                self.check_qubit(b)?;
                let ab = 1usize << (self.n - 1 - a);
                let bb = 1usize << (self.n - 1 - b);
                for j in 0..self.vec.len() {
                    if j & ab != 0 && j & bb == 0 {
                        self.vec.swap(j, (j & !ab) | bb);
                    }
                }
                Ok(())
            }
        }
    }

    /// `R_Z(theta) = diag(e^{-i theta/2}, e^{i theta/2})` on qubit `k`.
    pub fn apply_rz(&mut self, k: usize, theta: f64) -> Result<()> {
        let zero = Complex::new(T::zero(), T::zero());
        let half = theta / 2.0;
        let lo = Complex::new(T::from_f64_lossy(half.cos()), T::from_f64_lossy(-half.sin()));
        let hi = Complex::new(T::from_f64_lossy(half.cos()), T::from_f64_lossy(half.sin()));
        self.apply_1q(k, [lo, zero, zero, hi])
    }

    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(PfsrError::DimensionMismatch {
                expected: self.n,
                got: p.num_qubits(),
            });
        }
        self.vec = apply_pauli_vec(p, &self.vec);
        Ok(())
    }

    /// Apply `sum_j coef_j W_j`, optionally renormalizing (Kraus semantics).
    pub fn apply_pauli_sum(
        &mut self,
        terms: &[(Complex<T>, PauliString)],
        renormalize: bool,
    ) -> Result<()> {
        if terms.is_empty() {
            return Err(PfsrError::InvalidParameter("empty Pauli sum".into()));
        }
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.vec.len()];
        for (coef, w) in terms {
            if w.num_qubits() != self.n {
                return Err(PfsrError::DimensionMismatch {
                    expected: self.n,
                    got: w.num_qubits(),
                });
            }
            let term = apply_pauli_vec(w, &self.vec);
            for (a, b) in out.iter_mut().zip(term) {
                *a = *a + *coef * b;
            }
        }
        self.vec = out;
        let norm = self.norm_sqr().sqrt();
        if renormalize {
            if norm.as_f64() < POSTSELECT_EPS {
                return Err(PfsrError::NormDrift {
                    norm: norm.as_f64(),
                });
            }
            for z in self.vec.iter_mut() {
                *z = *z / norm;
            }
        } else if (norm.as_f64() - 1.0).abs() > crate::state::NORM_TOL {
            return Err(PfsrError::NormDrift {
                norm: norm.as_f64(),
            });
        }
        Ok(())
    }

    pub fn expectation_pauli(&self, p: &PauliString) -> Result<T> {
        if p.num_qubits() != self.n {
            return Err(PfsrError::DimensionMismatch {
                expected: self.n,
                got: p.num_qubits(),
            });
        }
        if !p.is_hermitian() {
            return Err(PfsrError::NonHermitian { phase: p.phase() });
        }
        let pv = apply_pauli_vec(p, &self.vec);
        let mut acc = Complex::new(T::zero(), T::zero());
        for (a, b) in self.vec.iter().zip(pv) {
            acc = acc + a.conj() * b;
        }
        Ok(acc.re)
    }

    /// Lueders measurement of a Hermitian Pauli.
    pub fn measure_pauli<R: Rng + ?Sized>(
        &mut self,
        p: &PauliString,
        rng: &mut R,
        forced: Option<i8>,
    ) -> Result<MeasurementOutcome<T>> {
        let exp = self.expectation_pauli(p)?;
        let p_plus = ((T::one() + exp) * T::from_f64_lossy(0.5))
            .as_f64()
            .clamp(0.0, 1.0);
        let value = match forced {
            Some(v) if v == 1 || v == -1 => v,
            Some(v) => {
                return Err(PfsrError::InvalidParameter(format!(
                    "forced outcome must be +1 or -1, got {v}"
                )))
            }
            None => {
                if rng.gen::<f64>() < p_plus {
                    1
                } else {
                    -1
                }
            }
        };
        let probability = if value == 1 { p_plus } else { 1.0 - p_plus };
        if probability < POSTSELECT_EPS {
            return Err(PfsrError::ImpossiblePostselection { probability });
        }
        let pv = apply_pauli_vec(p, &self.vec);
        let half = T::from_f64_lossy(0.5);
        let sign = if value == 1 { T::one() } else { -T::one() };
        let scale = T::from_f64_lossy(probability).sqrt();
        for (a, b) in self.vec.iter_mut().zip(pv) {
            *a = (*a + b * sign) * half / scale;
        }
        Ok(MeasurementOutcome {
            value,
            probability: T::from_f64_lossy(probability),
            forced: forced.is_some(),
        })
    }

    pub fn inner_product(&self, other: &DenseState<T>) -> Result<Complex<T>> {
        if self.n != other.n {
            return Err(PfsrError::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut acc = Complex::new(T::zero(), T::zero());
        for (a, b) in self.vec.iter().zip(&other.vec) {
            acc = acc + a.conj() * *b;
        }
        Ok(acc)
    }
}

/// `|<a|b>|^2` for two unit vectors.
pub fn fidelity<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex::new(T::zero(), T::zero());
    for (x, y) in a.iter().zip(b) {
        acc = acc + x.conj() * *y;
    }
    norm_sqr(acc).as_f64()
}
