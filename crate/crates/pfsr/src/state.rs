//! The sparse Pauli-frame state and its update rules.
//!
//! A state is `|psi> = sum_s alpha_s P_s |0_frame>`, with `|0_frame>` the
//! joint +1 eigenstate of `n` independent commuting Hermitian Paulis. The
//! label `s` of an entry is the anticommutation pattern of its history `P_s`
//! against the frame, which makes labels invariant under simultaneous
//! conjugation of frame and histories; Clifford gates therefore never force a
//! relabel. Non-Clifford unitaries and Kraus operators enter through
//! [`PfsrState::apply_pauli_sum`], the one operation that can grow the map.
//!
//! Pauli measurements split into two regimes. An operator commuting with the
//! whole frame is diagonal on labels and only filters entries. An operator
//! anticommuting with some generator rotates the frame; the posterior follows
//! in closed form from the projector identity
//! `(1 ± B)/2 · P_s = P_s · B^{z'} A^{x'} ...` with `A` the replaced
//! generator, avoiding any explicit reduction circuit. Both branches
//! reproduce the dense Lueders update exactly, global phase included.

use std::cell::{Ref, RefCell};
use std::collections::BTreeMap;

use num_complex::Complex;
use rand::Rng;

use crate::bits::BitString;
use crate::pauli::PauliString;
use crate::scalar::{norm_sqr, Scalar};
use crate::tableau::{decompose_with_solver, CliffordTableau, FrameSolver, Gate};
use crate::{PfsrError, Result};

/// Amplitudes below this magnitude are dropped after merges.
pub const DROP_EPS: f64 = 1e-14;
/// Allowed drift of the state norm for nominally norm-preserving updates.
pub const NORM_TOL: f64 = 1e-6;
/// Forced outcomes with probability below this are rejected.
pub const POSTSELECT_EPS: f64 = 1e-12;

/// One sparse term: amplitude and Pauli history applied to `|0_frame>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry<T: Scalar> {
    pub amp: Complex<T>,
    pub history: PauliString,
}

/// Per-trajectory bookkeeping carried by the state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrajectoryLog {
    /// High-water mark of the sparse map size.
    pub max_entries: usize,
    /// Times truncation had to keep the largest entry to avoid emptying the state.
    pub truncation_fallbacks: u64,
}

/// Result of a Pauli measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOutcome<T: Scalar> {
    /// Eigenvalue, +1 or -1.
    pub value: i8,
    /// Probability the realized outcome had before projection.
    pub probability: T,
    /// Whether the outcome was postselected rather than sampled.
    pub forced: bool,
}

/// Sparse Pauli-frame representation of an `n`-qubit pure state.
#[derive(Debug, Clone)]
pub struct PfsrState<T: Scalar> {
    n: usize,
    frame: Vec<PauliString>,
    entries: BTreeMap<BitString, Entry<T>>,
    pending_clifford: Option<CliffordTableau>,
    solver: RefCell<Option<FrameSolver>>,
    log: TrajectoryLog,
}

impl<T: Scalar> PfsrState<T> {
    /// `|0...0>` with the computational frame `Z_0 .. Z_{n-1}`.
    pub fn new(n: usize) -> Result<Self> {
        let frame = (0..n).map(|k| PauliString::z_op(n, k)).collect();
        Self::with_frame(frame)
    }

    /// `|0_frame>` for a caller-supplied frame of independent commuting
    /// Hermitian Paulis (signs allowed).
    pub fn with_frame(frame: Vec<PauliString>) -> Result<Self> {
        let n = frame.len();
        if n == 0 {
            return Err(PfsrError::EmptyState);
        }
        for (i, s) in frame.iter().enumerate() {
            if s.num_qubits() != n {
                return Err(PfsrError::DimensionMismatch {
                    expected: n,
                    got: s.num_qubits(),
                });
            }
            if !s.is_hermitian() {
                return Err(PfsrError::NonHermitian { phase: s.phase() });
            }
            for t in &frame[i + 1..] {
                if !s.commutes(t) {
                    return Err(PfsrError::BadGenerators);
                }
            }
        }
        // Independence check doubles as the solver warm-up.
        let solver = FrameSolver::build(&frame)?;
        let mut entries = BTreeMap::new();
        entries.insert(
            BitString::zeros(n),
            Entry {
                amp: Complex::new(T::one(), T::zero()),
                history: PauliString::identity(n),
            },
        );
        Ok(PfsrState {
            n,
            frame,
            entries,
            pending_clifford: None,
            solver: RefCell::new(Some(solver)),
            log: TrajectoryLog {
                max_entries: 1,
                truncation_fallbacks: 0,
            },
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn frame(&self) -> &[PauliString] {
        &self.frame
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BitString, &Entry<T>)> {
        self.entries.iter()
    }

    pub fn log(&self) -> &TrajectoryLog {
        &self.log
    }

    pub fn pending_clifford(&self) -> Option<&CliffordTableau> {
        self.pending_clifford.as_ref()
    }

    pub fn norm_sqr(&self) -> T {
        self.entries
            .values()
            .map(|e| norm_sqr(e.amp))
            .fold(T::zero(), |a, b| a + b)
    }

    /// Anticommutation pattern of `p` against the frame.
    pub fn label_of(&self, p: &PauliString) -> BitString {
        let mut label = BitString::zeros(self.n);
        for (i, s) in self.frame.iter().enumerate() {
            if !s.commutes(p) {
                label.set(i, true);
            }
        }
        label
    }

    fn check_dims(&self, p: &PauliString) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(PfsrError::DimensionMismatch {
                expected: self.n,
                got: p.num_qubits(),
            });
        }
        Ok(())
    }

    fn invalidate_solver(&mut self) {
        *self.solver.get_mut() = None;
    }

    fn solver_ref(&self) -> Result<Ref<'_, FrameSolver>> {
        {
            let mut slot = self.solver.borrow_mut();
            if slot.is_none() {
                *slot = Some(FrameSolver::build(&self.frame)?);
            }
        }
        Ok(Ref::map(self.solver.borrow(), |o| {
            o.as_ref().expect("solver just built")
        }))
    }

    /// Quarter-turn phase `i^gamma` of the frame-group element `q`; `q` must
    /// have an all-zero label.
    fn group_phase(&self, q: &PauliString) -> Result<u8> {
        let solver = self.solver_ref()?;
        let (_, gamma) = decompose_with_solver(&solver, &self.frame, q)?;
        Ok(gamma)
    }

    fn phase_factor(gamma: u8) -> Complex<T> {
        match gamma & 3 {
            0 => Complex::new(T::one(), T::zero()),
            1 => Complex::new(T::zero(), T::one()),
            2 => Complex::new(-T::one(), T::zero()),
            _ => Complex::new(T::zero(), -T::one()),
        }
    }

    fn note_size(&mut self) {
        if self.entries.len() > self.log.max_entries {
            self.log.max_entries = self.entries.len();
        }
    }

    /// Conjugate the state by an elementary Clifford gate.
    ///
    /// Labels are conjugation-invariant, so this touches only frame rows and
    /// histories. With a pending deferred Clifford the gate is folded into it
    /// instead, preserving operation order.
    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        let (a, b) = g.qubits();
        if a >= self.n || b.is_some_and(|b| b >= self.n) {
            return Err(PfsrError::InvalidParameter(format!(
                "gate {g:?} out of range for {} qubits",
                self.n
            )));
        }
        if b == Some(a) {
            return Err(PfsrError::InvalidParameter(format!(
                "gate {g:?} addresses one qubit twice"
            )));
        }
        if let Some(u) = &mut self.pending_clifford {
            u.apply_gate(g);
            return Ok(());
        }
        for s in &mut self.frame {
            s.conjugate_gate_mut(g);
        }
        for e in self.entries.values_mut() {
            e.history.conjugate_gate_mut(g);
        }
        self.invalidate_solver();
        Ok(())
    }

    /// Defer a whole Clifford tableau; applied at the next
    /// [`PfsrState::flush_relabel`] (which non-Clifford operations trigger
    /// internally).
    pub fn apply_clifford(&mut self, t: &CliffordTableau) -> Result<()> {
        if t.num_qubits() != self.n {
            return Err(PfsrError::DimensionMismatch {
                expected: self.n,
                got: t.num_qubits(),
            });
        }
        self.pending_clifford = Some(match self.pending_clifford.take() {
            Some(u) => CliffordTableau::compose(t, &u)?,
            None => t.clone(),
        });
        Ok(())
    }

    /// Apply any pending deferred Clifford to frame and histories, then
    /// rebuild the label map.
    pub fn flush_relabel(&mut self) -> Result<()> {
        let Some(u) = self.pending_clifford.take() else {
            return Ok(());
        };
        for s in &mut self.frame {
            let img = u.conjugate(s)?;
            debug_assert!(img.is_hermitian());
            *s = img;
        }
        self.invalidate_solver();
        let old = std::mem::take(&mut self.entries);
        for (label, mut e) in old {
            e.history = u.conjugate(&e.history)?;
            let fresh = self.label_of(&e.history);
            debug_assert_eq!(fresh, label, "conjugation must preserve labels");
            self.entries.insert(fresh, e);
        }
        Ok(())
    }

    /// Multiply the state by a Pauli operator (unitary, exact phases).
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_dims(p)?;
        self.flush_relabel()?;
        let mask = self.label_of(p);
        let old = std::mem::take(&mut self.entries);
        for (label, mut e) in old {
            e.history = p.multiply(&e.history);
            let mut new_label = label;
            new_label.xor_assign(&mask);
            self.entries.insert(new_label, e);
        }
        Ok(())
    }

    /// Apply `sum_j coef_j W_j` to the state.
    ///
    /// Entries landing on an occupied label are merged against the first
    /// history stored there, with the relative phase read off a frame-group
    /// decomposition. Terms are processed in caller order, source entries in
    /// ascending label order, so the accumulation is deterministic.
    ///
    /// With `renormalize` the result is rescaled to unit norm (Kraus-branch
    /// semantics); otherwise the norm must already be preserved to within
    /// [`NORM_TOL`], as for a unitary Pauli sum.
    pub fn apply_pauli_sum(
        &mut self,
        terms: &[(Complex<T>, PauliString)],
        renormalize: bool,
    ) -> Result<()> {
        if terms.is_empty() {
            return Err(PfsrError::InvalidParameter("empty Pauli sum".into()));
        }
        for (_, w) in terms {
            self.check_dims(w)?;
        }
        self.flush_relabel()?;
        let mut merged: BTreeMap<BitString, Entry<T>> = BTreeMap::new();
        for (coef, w) in terms {
            let mask = self.label_of(w);
            for (label, e) in &self.entries {
                let mut new_label = label.clone();
                new_label.xor_assign(&mask);
                let amp = *coef * e.amp;
                let history = w.multiply(&e.history);
                match merged.entry(new_label) {
                    std::collections::btree_map::Entry::Vacant(slot) => {
                        slot.insert(Entry { amp, history });
                    }
                    std::collections::btree_map::Entry::Occupied(mut slot) => {
                        let q = slot.get().history.adjoint().multiply(&history);
                        let gamma = self.group_phase(&q)?;
                        slot.get_mut().amp = slot.get().amp + amp * Self::phase_factor(gamma);
                    }
                }
            }
        }
        merged.retain(|_, e| norm_sqr(e.amp).as_f64() > DROP_EPS * DROP_EPS);
        let norm_sqr_total = merged
            .values()
            .map(|e| norm_sqr(e.amp))
            .fold(T::zero(), |a, b| a + b);
        let norm = norm_sqr_total.sqrt();
        if renormalize {
            if norm.as_f64() < POSTSELECT_EPS {
                return Err(PfsrError::NormDrift {
                    norm: norm.as_f64(),
                });
            }
            for e in merged.values_mut() {
                e.amp = e.amp / norm;
            }
        } else if (norm.as_f64() - 1.0).abs() > NORM_TOL {
            return Err(PfsrError::NormDrift {
                norm: norm.as_f64(),
            });
        }
        self.entries = merged;
        self.note_size();
        Ok(())
    }

    /// `<psi| p |psi>` for a Hermitian Pauli.
    pub fn expectation_pauli(&self, p: &PauliString) -> Result<T> {
        self.check_dims(p)?;
        if !p.is_hermitian() {
            return Err(PfsrError::NonHermitian { phase: p.phase() });
        }
        if self.pending_clifford.is_some() {
            let mut flushed = self.clone();
            flushed.flush_relabel()?;
            return flushed.expectation_pauli(p);
        }
        let mask = self.label_of(p);
        let mut acc = Complex::new(T::zero(), T::zero());
        for (label, e) in &self.entries {
            let mut partner = label.clone();
            partner.xor_assign(&mask);
            let Some(e2) = self.entries.get(&partner) else {
                continue;
            };
            // <0| P_{s'}^dag p P_s |0> with s' = s ^ mask.
            let q = e2.history.adjoint().multiply(&p.multiply(&e.history));
            let gamma = self.group_phase(&q)?;
            acc = acc + e2.amp.conj() * e.amp * Self::phase_factor(gamma);
        }
        debug_assert!(
            acc.im.as_f64().abs() < 1e-9,
            "Hermitian expectation acquired imaginary part {}",
            acc.im.as_f64()
        );
        // Rounding can push an eigenvalue expectation just past +-1.
        Ok(acc.re.max(-T::one()).min(T::one()))
    }

    /// `<self|other>`; both states must share a bit-identical frame.
    pub fn inner_product(&self, other: &PfsrState<T>) -> Result<Complex<T>> {
        if self.n != other.n {
            return Err(PfsrError::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        if self.pending_clifford.is_some() {
            let mut flushed = self.clone();
            flushed.flush_relabel()?;
            return flushed.inner_product(other);
        }
        if other.pending_clifford.is_some() {
            let mut flushed = other.clone();
            flushed.flush_relabel()?;
            return self.inner_product(&flushed);
        }
        if self.frame != other.frame {
            return Err(PfsrError::IncompatibleFrame);
        }
        let mut acc = Complex::new(T::zero(), T::zero());
        for (label, e) in &self.entries {
            let Some(e2) = other.entries.get(label) else {
                continue;
            };
            let q = e.history.adjoint().multiply(&e2.history);
            let gamma = self.group_phase(&q)?;
            acc = acc + e.amp.conj() * e2.amp * Self::phase_factor(gamma);
        }
        Ok(acc)
    }

    /// Measure a Hermitian Pauli operator; `forced` postselects an outcome.
    ///
    /// Commuting case: eigenvalues are affine in the label bits, losing
    /// entries on the wrong branch. Anticommuting case: the lowest-index
    /// anticommuting generator `A = S_r` is replaced by the measured operator
    /// and every history picks up the closed-form projector factors.
    pub fn measure_pauli<R: Rng + ?Sized>(
        &mut self,
        p: &PauliString,
        rng: &mut R,
        forced: Option<i8>,
    ) -> Result<MeasurementOutcome<T>> {
        self.check_dims(p)?;
        if !p.is_hermitian() {
            return Err(PfsrError::NonHermitian { phase: p.phase() });
        }
        if let Some(v) = forced {
            if v != 1 && v != -1 {
                return Err(PfsrError::InvalidParameter(format!(
                    "forced outcome must be +1 or -1, got {v}"
                )));
            }
        }
        self.flush_relabel()?;
        let mask = self.label_of(p);
        let outcome = if mask.is_zero() {
            self.measure_commuting(p, rng, forced)?
        } else {
            self.measure_anticommuting(p, &mask, rng, forced)?
        };
        self.note_size();
        debug_assert!((self.norm_sqr().as_f64() - 1.0).abs() < 1e-6);
        Ok(outcome)
    }

    fn pick_outcome<R: Rng + ?Sized>(
        p_plus: T,
        rng: &mut R,
        forced: Option<i8>,
    ) -> Result<(i8, T)> {
        let p_plus_f = p_plus.as_f64().clamp(0.0, 1.0);
        let value = match forced {
            Some(v) => v,
            None => {
                if rng.gen::<f64>() < p_plus_f {
                    1
                } else {
                    -1
                }
            }
        };
        let probability = if value == 1 {
            p_plus
        } else {
            T::one() - p_plus
        };
        if probability.as_f64() < POSTSELECT_EPS {
            return Err(PfsrError::ImpossiblePostselection {
                probability: probability.as_f64(),
            });
        }
        Ok((value, probability))
    }

    fn measure_commuting<R: Rng + ?Sized>(
        &mut self,
        p: &PauliString,
        rng: &mut R,
        forced: Option<i8>,
    ) -> Result<MeasurementOutcome<T>> {
        // p = i^gamma * prod_{i in A} S_i, so its eigenvalue on entry s is
        // i^gamma * (-1)^{<A, s>}; Hermiticity pins gamma to 0 or 2.
        let solver = self.solver_ref()?;
        let (subset, gamma) = decompose_with_solver(&solver, &self.frame, p)?;
        drop(solver);
        debug_assert!(gamma == 0 || gamma == 2);
        let base_sign = if gamma == 2 { -1i8 } else { 1i8 };
        let eigen = |label: &BitString| -> i8 {
            if label.parity_and(&subset) {
                -base_sign
            } else {
                base_sign
            }
        };
        let mut p_plus = T::zero();
        for (label, e) in &self.entries {
            if eigen(label) == 1 {
                p_plus = p_plus + norm_sqr(e.amp);
            }
        }
        let (value, probability) = Self::pick_outcome(p_plus, rng, forced)?;
        self.entries.retain(|label, _| eigen(label) == value);
        let scale = probability.sqrt();
        for e in self.entries.values_mut() {
            e.amp = e.amp / scale;
        }
        Ok(MeasurementOutcome {
            value,
            probability,
            forced: forced.is_some(),
        })
    }

    fn measure_anticommuting<R: Rng + ?Sized>(
        &mut self,
        p: &PauliString,
        mask: &BitString,
        rng: &mut R,
        forced: Option<i8>,
    ) -> Result<MeasurementOutcome<T>> {
        let exp = self.expectation_pauli(p)?;
        let half = T::from_f64_lossy(0.5);
        let p_plus = (T::one() + exp) * half;
        let (value, probability) = Self::pick_outcome(p_plus, rng, forced)?;
        let b = value == -1;

        let r = mask.iter_ones().next().expect("mask is nonzero");
        let a_op = self.frame[r].clone();
        for j in mask.iter_ones() {
            if j != r {
                self.frame[j] = self.frame[j].multiply(&a_op);
                debug_assert!(self.frame[j].is_hermitian());
            }
        }
        self.frame[r] = p.clone();
        self.invalidate_solver();

        // Posterior of (1 + (-1)^b p)/2 in the new frame: entry s contributes
        // history W = P_s B^{z'} A^{x' xor b} with z' = old label bit r and
        // x' = [P_s, B} anticommutation, weighted by the reordering sign
        // (-1)^{z'x'} and the outcome sign (-1)^{z' b}, all over sqrt(2).
        let old = std::mem::take(&mut self.entries);
        let mut merged: BTreeMap<BitString, Entry<T>> = BTreeMap::new();
        let inv_sqrt2 = T::from_f64_lossy(std::f64::consts::FRAC_1_SQRT_2);
        for (label, e) in old {
            let z = label.get(r);
            let x = !e.history.commutes(p);
            let mut w = e.history;
            if z {
                w = w.multiply(p);
            }
            if x ^ b {
                w = w.multiply(&a_op);
            }
            let mut sign = T::one();
            if z & x {
                sign = -sign;
            }
            if z & b {
                sign = -sign;
            }
            let amp = e.amp * (sign * inv_sqrt2);
            let new_label = self.label_of(&w);
            match merged.entry(new_label) {
                std::collections::btree_map::Entry::Vacant(slot) => {
                    slot.insert(Entry { amp, history: w });
                }
                std::collections::btree_map::Entry::Occupied(mut slot) => {
                    let q = slot.get().history.adjoint().multiply(&w);
                    let gamma = self.group_phase(&q)?;
                    slot.get_mut().amp = slot.get().amp + amp * Self::phase_factor(gamma);
                }
            }
        }
        merged.retain(|_, e| norm_sqr(e.amp).as_f64() > DROP_EPS * DROP_EPS);
        let scale = probability.sqrt();
        for e in merged.values_mut() {
            e.amp = e.amp / scale;
        }
        self.entries = merged;
        Ok(MeasurementOutcome {
            value,
            probability,
            forced: forced.is_some(),
        })
    }

    /// Drop entries with `|amp| < eps`, then renormalize.
    ///
    /// If every entry falls below the threshold the single largest one is
    /// kept instead and the fallback counter increments. Returns the number
    /// of removed entries.
    pub fn truncate(&mut self, eps: T) -> Result<usize> {
        self.flush_relabel()?;
        let eps_sqr = eps * eps;
        let total = self.entries.len();
        let survivors = self
            .entries
            .values()
            .filter(|e| norm_sqr(e.amp) >= eps_sqr)
            .count();
        if survivors == 0 {
            let best = self
                .entries
                .iter()
                .max_by(|(la, ea), (lb, eb)| {
                    norm_sqr(ea.amp)
                        .partial_cmp(&norm_sqr(eb.amp))
                        .expect("amplitudes are finite")
                        .then_with(|| lb.cmp(la))
                })
                .map(|(l, _)| l.clone())
                .ok_or(PfsrError::EmptyState)?;
            self.entries.retain(|l, _| *l == best);
            self.log.truncation_fallbacks += 1;
        } else {
            self.entries.retain(|_, e| norm_sqr(e.amp) >= eps_sqr);
        }
        let removed = total - self.entries.len();
        if removed > 0 {
            let norm = self.norm_sqr().sqrt();
            for e in self.entries.values_mut() {
                e.amp = e.amp / norm;
            }
        }
        Ok(removed)
    }

    /// Human-readable snapshot: frame generators prefixed `S:`, then one
    /// line per entry as `label<TAB>re,im<TAB>pauli-literal`.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut snap = self.clone();
        snap.flush_relabel()
            .expect("flushing a valid state cannot fail");
        let mut out = String::new();
        for s in &snap.frame {
            writeln!(out, "S: {s}").expect("string write");
        }
        for (label, e) in &snap.entries {
            writeln!(
                out,
                "{label}\t{},{}\t{}",
                e.amp.re, e.amp.im, e.history
            )
            .expect("string write");
        }
        out
    }
}
