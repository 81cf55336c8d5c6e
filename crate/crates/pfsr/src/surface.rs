//! Rotated surface code, extraction schedules, and the memory experiment.
//!
//! The code lives on a `d x d` data lattice (row-major indices) with
//! plaquette stabilizers on the dual grid: bulk plaquettes weight 4, boundary
//! plaquettes weight 2, X and Z checks in a checkerboard pattern. Logical Z
//! runs down column 0, logical X across row 0, and each stabilizer owns one
//! ancilla (index `d^2 + i`) for circuit-level extraction.
//!
//! Three schedules drive the memory experiment. The phenomenological sweep
//! walks plaquettes from the top-left corner, noising each uncovered support
//! qubit and measuring the stabilizer immediately, which keeps the sparse
//! expansion from ever seeing more than a ribbon of unprojected noise. The
//! layered circuit schedule runs one full ancilla cycle at a time in the same
//! sweep order; the parallel schedule is the standard four-step CNOT dance.
//! Hook errors are kept benign by fixed corner orders (Z checks NW,NE,SW,SE;
//! X checks NW,SW,NE,SE).
//!
//! Noise placement is uniform across schedules: a channel after every gate on
//! every touched qubit, a preparation flip after every ancilla reset, a
//! channel on the ancilla before its measurement, and a classical flip on
//! every recorded outcome. A [`NoiseDriver`] decides what actually happens at
//! each site, so sampling, counting, and fault-injection runs all traverse
//! identical site sequences.

use rand::Rng;

use crate::bits::BitString;
use crate::noise::{apply_exact, Channel, NoiseDriver};
use crate::pauli::PauliString;
use crate::scalar::Scalar;
use crate::state::PfsrState;
use crate::tableau::Gate;
use crate::{PfsrError, Result};

/// Stabilizer type in the checkerboard.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabKind {
    X,
    Z,
}

/// One plaquette check.
#[derive(Debug, Clone)]
pub struct Stabilizer {
    pub kind: StabKind,
    /// Data-qubit support, ascending.
    pub support: Vec<usize>,
    /// Corners in hook-safe CNOT order; `None` where the plaquette hangs off
    /// the lattice. Slot positions are globally aligned so the parallel
    /// schedule's step `j` never touches a data qubit twice.
    pub slots: [Option<usize>; 4],
    /// Ancilla qubit index (`d^2 + stabilizer index`).
    pub ancilla: usize,
    /// Plaquette coordinates; data corner `(r, c)` is index `r*d + c`.
    pub row: isize,
    pub col: isize,
}

/// Distance-`d` rotated surface code.
#[derive(Debug, Clone)]
pub struct RotatedSurfaceCode {
    d: usize,
    stabilizers: Vec<Stabilizer>,
    logical_x: PauliString,
    logical_z: PauliString,
}

/// Build the distance-`d` code; `d` must be odd and at least 3.
pub fn build_code(d: usize) -> Result<RotatedSurfaceCode> {
    if d < 3 || d % 2 == 0 {
        return Err(PfsrError::InvalidParameter(format!(
            "code distance must be odd and >= 3, got {d}"
        )));
    }
    let dd = d as isize;
    let n = d * d;
    let corner = |r: isize, c: isize| -> Option<usize> {
        if r < 0 || c < 0 || r >= dd || c >= dd {
            None
        } else {
            Some((r * dd + c) as usize)
        }
    };
    let mut stabilizers = Vec::with_capacity(n - 1);
    for r in -1..dd {
        for c in -1..dd {
            let kind = if (r + c).rem_euclid(2) == 0 {
                StabKind::X
            } else {
                StabKind::Z
            };
            let vertical = r == -1 || r == dd - 1;
            let horizontal = c == -1 || c == dd - 1;
            // Weight-1 corners never appear; top/bottom boundaries carry only
            // Z checks, left/right only X checks.
            if vertical && horizontal {
                continue;
            }
            if vertical && kind != StabKind::Z {
                continue;
            }
            if horizontal && kind != StabKind::X {
                continue;
            }
            let (nw, ne, sw, se) = (
                corner(r, c),
                corner(r, c + 1),
                corner(r + 1, c),
                corner(r + 1, c + 1),
            );
            let slots = match kind {
                StabKind::Z => [nw, ne, sw, se],
                StabKind::X => [nw, sw, ne, se],
            };
            let mut support: Vec<usize> = slots.iter().flatten().copied().collect();
            support.sort_unstable();
            debug_assert!(support.len() == 2 || support.len() == 4);
            stabilizers.push(Stabilizer {
                kind,
                support,
                slots,
                ancilla: 0,
                row: r,
                col: c,
            });
        }
    }
    debug_assert_eq!(stabilizers.len(), n - 1);
    for (i, s) in stabilizers.iter_mut().enumerate() {
        s.ancilla = n + i;
    }
    let mut zl = BitString::zeros(n);
    for r in 0..d {
        zl.set(r * d, true);
    }
    let mut xl = BitString::zeros(n);
    for c in 0..d {
        xl.set(c, true);
    }
    Ok(RotatedSurfaceCode {
        d,
        stabilizers,
        logical_x: PauliString::from_parts(BitString::zeros(n), xl, 0),
        logical_z: PauliString::from_parts(zl, BitString::zeros(n), 0),
    })
}

impl RotatedSurfaceCode {
    pub fn distance(&self) -> usize {
        self.d
    }

    pub fn num_data_qubits(&self) -> usize {
        self.d * self.d
    }

    pub fn num_stabilizers(&self) -> usize {
        self.stabilizers.len()
    }

    /// Data plus one ancilla per stabilizer.
    pub fn num_physical_qubits(&self) -> usize {
        2 * self.d * self.d - 1
    }

    pub fn stabilizers(&self) -> &[Stabilizer] {
        &self.stabilizers
    }

    /// Logical X on the `d^2` data qubits (row 0).
    pub fn logical_x(&self) -> &PauliString {
        &self.logical_x
    }

    /// Logical Z on the `d^2` data qubits (column 0).
    pub fn logical_z(&self) -> &PauliString {
        &self.logical_z
    }

    /// Stabilizer `i` embedded into an `n`-qubit register (`n >= d^2`).
    pub fn stabilizer_pauli(&self, i: usize, n: usize) -> PauliString {
        let s = &self.stabilizers[i];
        let mut z = BitString::zeros(n);
        let mut x = BitString::zeros(n);
        for &q in &s.support {
            match s.kind {
                StabKind::Z => z.set(q, true),
                StabKind::X => x.set(q, true),
            }
        }
        PauliString::from_parts(z, x, 0)
    }

    /// The logical operator measured in `basis`, embedded into `n` qubits.
    pub fn logical_pauli(&self, basis: Basis, n: usize) -> PauliString {
        let mut z = BitString::zeros(n);
        let mut x = BitString::zeros(n);
        for q in self.logical_support(basis) {
            match basis {
                Basis::Z => z.set(q, true),
                Basis::X => x.set(q, true),
            }
        }
        PauliString::from_parts(z, x, 0)
    }

    /// Data-qubit support of the logical operator measured in `basis`.
    pub fn logical_support(&self, basis: Basis) -> Vec<usize> {
        match basis {
            Basis::Z => self.logical_z.support(),
            Basis::X => self.logical_x.support(),
        }
    }
}

/// Memory-experiment basis: which logical eigenstate is prepared and read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

/// Error-model granularity of a memory run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Phenomenological,
    CircuitLayered,
    CircuitParallel,
}

/// One schedule entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepKind {
    /// Apply the round's channel to each listed qubit, in order.
    NoiseOn(Vec<usize>),
    /// Measure stabilizer `i`: directly in phenomenological mode, via its
    /// ancilla (idle channel, measure, flip, reset) in circuit mode.
    MeasureStabilizer(usize),
    /// Gates that are simultaneous on hardware; the walker serializes them
    /// (and their per-gate noise) in list order.
    GateLayer(Vec<Gate>),
    /// Full extraction cycle for stabilizer `i`'s ancilla.
    AncillaCycle(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleStep {
    pub round: usize,
    pub kind: StepKind,
}

/// Plaquette sweep order for the phenomenological schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    RowMajor,
    ColumnMajor,
}

/// Greedy noise-then-measure sweep from the top-left corner.
pub fn phenomenological_schedule(code: &RotatedSurfaceCode) -> Vec<ScheduleStep> {
    phenomenological_schedule_in(code, SweepOrder::RowMajor)
}

/// Same sweep with a caller-chosen plaquette order; the realized channel is
/// order-independent, which the tests check distributionally.
pub fn phenomenological_schedule_in(
    code: &RotatedSurfaceCode,
    order: SweepOrder,
) -> Vec<ScheduleStep> {
    let mut idx: Vec<usize> = (0..code.num_stabilizers()).collect();
    if order == SweepOrder::ColumnMajor {
        idx.sort_by_key(|&i| (code.stabilizers[i].col, code.stabilizers[i].row));
    }
    let mut covered = vec![false; code.num_data_qubits()];
    let mut steps = Vec::new();
    for i in idx {
        let fresh: Vec<usize> = code.stabilizers[i]
            .support
            .iter()
            .copied()
            .filter(|&q| !covered[q])
            .collect();
        for &q in &fresh {
            covered[q] = true;
        }
        if !fresh.is_empty() {
            steps.push(ScheduleStep {
                round: 0,
                kind: StepKind::NoiseOn(fresh),
            });
        }
        steps.push(ScheduleStep {
            round: 0,
            kind: StepKind::MeasureStabilizer(i),
        });
    }
    debug_assert!(covered.iter().all(|&c| c));
    steps
}

/// Circuit-level schedule: sequential ancilla cycles when `layered`, the
/// global four-step CNOT dance otherwise.
pub fn circuit_level_schedule(code: &RotatedSurfaceCode, layered: bool) -> Vec<ScheduleStep> {
    let mut steps = Vec::new();
    if layered {
        for i in 0..code.num_stabilizers() {
            steps.push(ScheduleStep {
                round: 0,
                kind: StepKind::AncillaCycle(i),
            });
        }
        return steps;
    }
    let h_layer: Vec<Gate> = code
        .stabilizers
        .iter()
        .filter(|s| s.kind == StabKind::X)
        .map(|s| Gate::H(s.ancilla))
        .collect();
    steps.push(ScheduleStep {
        round: 0,
        kind: StepKind::GateLayer(h_layer.clone()),
    });
    for slot in 0..4 {
        let gates: Vec<Gate> = code
            .stabilizers
            .iter()
            .filter_map(|s| {
                s.slots[slot].map(|q| match s.kind {
                    StabKind::Z => Gate::Cnot(q, s.ancilla),
                    StabKind::X => Gate::Cnot(s.ancilla, q),
                })
            })
            .collect();
        steps.push(ScheduleStep {
            round: 0,
            kind: StepKind::GateLayer(gates),
        });
    }
    steps.push(ScheduleStep {
        round: 0,
        kind: StepKind::GateLayer(h_layer),
    });
    for i in 0..code.num_stabilizers() {
        steps.push(ScheduleStep {
            round: 0,
            kind: StepKind::MeasureStabilizer(i),
        });
    }
    steps
}

fn fmt_gate(g: &Gate) -> String {
    match *g {
        Gate::H(k) => format!("H({k})"),
        Gate::S(k) => format!("S({k})"),
        Gate::Sdg(k) => format!("Sdg({k})"),
        Gate::X(k) => format!("X({k})"),
        Gate::Y(k) => format!("Y({k})"),
        Gate::Z(k) => format!("Z({k})"),
        Gate::Cnot(a, b) => format!("CNOT({a},{b})"),
        Gate::Cz(a, b) => format!("CZ({a},{b})"),
        Gate::Swap(a, b) => format!("SWAP({a},{b})"),
    }
}

/// Text form of a schedule, one step per line.
pub fn dump_schedule(steps: &[ScheduleStep]) -> String {
    let mut out = String::new();
    for step in steps {
        let line = match &step.kind {
            StepKind::NoiseOn(qs) => {
                let body: Vec<String> = qs.iter().map(ToString::to_string).collect();
                format!("noise {}", body.join(" "))
            }
            StepKind::MeasureStabilizer(i) => format!("measure {i}"),
            StepKind::AncillaCycle(i) => format!("cycle {i}"),
            StepKind::GateLayer(gs) => {
                let body: Vec<String> = gs.iter().map(fmt_gate).collect();
                format!("layer {}", body.join(" "))
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Syndrome history of one memory-experiment trajectory.
#[derive(Debug, Clone)]
pub struct SyndromeRecord {
    pub d: usize,
    pub basis: Basis,
    pub mode: Mode,
    /// `(d+1) x (d^2-1)` outcome bits, `true` marking a `-1` result. The last
    /// row is the perfect transversal readout: recomputed for the basis type,
    /// copied from the previous round for the other type.
    pub rows: Vec<Vec<bool>>,
    /// Transversal logical readout (`true` = `-1` eigenvalue).
    pub logical: bool,
    /// High-water mark of the sparse map over the trajectory.
    pub max_entries: usize,
    pub truncation_fallbacks: u64,
    /// Signed trajectory weight (1 unless quasiprobabilistic).
    pub weight: f64,
}

impl SyndromeRecord {
    /// Long-form `round,stabilizer,bit` lines.
    pub fn csv_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for (s, &b) in row.iter().enumerate() {
                lines.push(format!("{r},{s},{}", u8::from(b)));
            }
        }
        lines
    }
}

/// Executes schedule steps against a state, assigning fault-site indices in
/// a fixed traversal order shared by every driver.
struct RoundRunner<'a, T: Scalar, D: NoiseDriver<T>> {
    code: &'a RotatedSurfaceCode,
    ch: &'a Channel,
    driver: &'a mut D,
    eps: T,
    site: usize,
}

impl<'a, T: Scalar, D: NoiseDriver<T>> RoundRunner<'a, T, D> {
    fn channel_site<R: Rng + ?Sized>(
        &mut self,
        st: &mut PfsrState<T>,
        q: usize,
        rng: &mut R,
    ) -> Result<()> {
        let site = self.site;
        self.site += 1;
        self.driver.apply_channel(site, st, q, self.ch, rng)?;
        if self.eps > T::zero() {
            st.truncate(self.eps)?;
        }
        Ok(())
    }

    fn pair_site<R: Rng + ?Sized>(
        &mut self,
        st: &mut PfsrState<T>,
        a: usize,
        b: usize,
        rng: &mut R,
    ) -> Result<()> {
        let site = self.site;
        self.site += 1;
        self.driver.apply_pair(site, st, a, b, self.ch, rng)?;
        if self.eps > T::zero() {
            st.truncate(self.eps)?;
        }
        Ok(())
    }

    fn flip_site<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let site = self.site;
        self.site += 1;
        self.driver.sample_flip(site, self.ch, rng)
    }

    fn gate_with_noise<R: Rng + ?Sized>(
        &mut self,
        st: &mut PfsrState<T>,
        g: &Gate,
        rng: &mut R,
    ) -> Result<()> {
        st.apply_gate(g)?;
        let (a, b) = g.qubits();
        match b {
            Some(b) if self.ch.pair_correlated() => self.pair_site(st, a, b, rng),
            Some(b) => {
                self.channel_site(st, a, rng)?;
                self.channel_site(st, b, rng)
            }
            None => self.channel_site(st, a, rng),
        }
    }

    /// Measure the ancilla in Z, reset it, and record the (possibly flipped)
    /// outcome bit.
    fn measure_ancilla<R: Rng + ?Sized>(
        &mut self,
        st: &mut PfsrState<T>,
        i: usize,
        anc: usize,
        rng: &mut R,
        row: &mut [bool],
    ) -> Result<()> {
        let n = st.num_qubits();
        let out = st.measure_pauli(&PauliString::z_op(n, anc), rng, None)?;
        let mut bit = out.value == -1;
        if bit {
            st.apply_pauli(&PauliString::x_op(n, anc))?;
        }
        if self.flip_site(rng) {
            bit = !bit;
        }
        row[i] = bit;
        Ok(())
    }

    fn ancilla_cycle<R: Rng + ?Sized>(
        &mut self,
        st: &mut PfsrState<T>,
        i: usize,
        rng: &mut R,
        row: &mut [bool],
    ) -> Result<()> {
        let s = &self.code.stabilizers[i];
        let (kind, anc, slots) = (s.kind, s.ancilla, s.slots);
        let n = st.num_qubits();
        // Preparation error on the freshly reset ancilla.
        if self.flip_site(rng) {
            st.apply_pauli(&PauliString::x_op(n, anc))?;
        }
        if kind == StabKind::X {
            self.gate_with_noise(st, &Gate::H(anc), rng)?;
        }
        for q in slots.iter().flatten() {
            let g = match kind {
                StabKind::Z => Gate::Cnot(*q, anc),
                StabKind::X => Gate::Cnot(anc, *q),
            };
            self.gate_with_noise(st, &g, rng)?;
        }
        if kind == StabKind::X {
            self.gate_with_noise(st, &Gate::H(anc), rng)?;
        }
        // Ancilla idle noise, consolidated before its measurement.
        self.channel_site(st, anc, rng)?;
        self.measure_ancilla(st, i, anc, rng, row)
    }

    fn run_round<R: Rng + ?Sized>(
        &mut self,
        st: &mut PfsrState<T>,
        mode: Mode,
        steps: &[ScheduleStep],
        rng: &mut R,
        row: &mut [bool],
    ) -> Result<()> {
        if mode == Mode::CircuitParallel && !steps.is_empty() {
            // All ancillas were reset at the end of the previous round (or
            // start fresh); each takes a preparation error now. A round with
            // no steps uses no ancillas and prepares nothing.
            let ancillas: Vec<usize> = self.code.stabilizers.iter().map(|s| s.ancilla).collect();
            let n = st.num_qubits();
            for anc in ancillas {
                if self.flip_site(rng) {
                    st.apply_pauli(&PauliString::x_op(n, anc))?;
                }
            }
        }
        for step in steps {
            match (&step.kind, mode) {
                (StepKind::NoiseOn(qs), Mode::Phenomenological) => {
                    for &q in qs {
                        self.channel_site(st, q, rng)?;
                    }
                }
                (StepKind::MeasureStabilizer(i), Mode::Phenomenological) => {
                    let pauli = self.code.stabilizer_pauli(*i, st.num_qubits());
                    let out = st.measure_pauli(&pauli, rng, None)?;
                    let mut bit = out.value == -1;
                    if self.flip_site(rng) {
                        bit = !bit;
                    }
                    row[*i] = bit;
                }
                (StepKind::MeasureStabilizer(i), Mode::CircuitParallel) => {
                    let anc = self.code.stabilizers[*i].ancilla;
                    self.channel_site(st, anc, rng)?;
                    self.measure_ancilla(st, *i, anc, rng, row)?;
                }
                (StepKind::GateLayer(gs), Mode::CircuitParallel) => {
                    let gates = gs.clone();
                    for g in &gates {
                        self.gate_with_noise(st, g, rng)?;
                    }
                }
                (StepKind::AncillaCycle(i), Mode::CircuitLayered) => {
                    self.ancilla_cycle(st, *i, rng, row)?;
                }
                (kind, mode) => {
                    return Err(PfsrError::InvalidParameter(format!(
                        "schedule step {kind:?} does not belong to mode {mode:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One ideal-extraction syndrome round: exact channel on every data qubit in
/// sweep order, stabilizers measured directly, recorded bits flipped with
/// probability `p_meas`.
pub fn run_phenomenological_round<T: Scalar, R: Rng + ?Sized>(
    st: &mut PfsrState<T>,
    code: &RotatedSurfaceCode,
    channel: Option<&Channel>,
    p_meas: f64,
    rng: &mut R,
) -> Result<Vec<bool>> {
    let n = st.num_qubits();
    let mut row = vec![false; code.num_stabilizers()];
    for step in phenomenological_schedule(code) {
        match step.kind {
            StepKind::NoiseOn(qs) => {
                if let Some(ch) = channel {
                    for q in qs {
                        apply_exact(st, q, ch, rng)?;
                    }
                }
            }
            StepKind::MeasureStabilizer(i) => {
                let out = st.measure_pauli(&code.stabilizer_pauli(i, n), rng, None)?;
                let mut bit = out.value == -1;
                if p_meas > 0.0 && rng.gen::<f64>() < p_meas {
                    bit = !bit;
                }
                row[i] = bit;
            }
            _ => unreachable!("phenomenological schedule emits only noise and measure steps"),
        }
    }
    Ok(row)
}

/// Prepare the logical eigenstate for `basis` on a fresh `n`-qubit register:
/// computational zeros (transversal H first in the X basis), then every
/// stabilizer force-projected to +1.
pub fn prepare_logical_state<T: Scalar, R: Rng + ?Sized>(
    code: &RotatedSurfaceCode,
    basis: Basis,
    n: usize,
    rng: &mut R,
) -> Result<PfsrState<T>> {
    let mut st = PfsrState::<T>::new(n)?;
    if basis == Basis::X {
        for k in 0..code.num_data_qubits() {
            st.apply_gate(&Gate::H(k))?;
        }
    }
    for i in 0..code.num_stabilizers() {
        st.measure_pauli(&code.stabilizer_pauli(i, n), rng, Some(1))?;
    }
    Ok(st)
}

/// Full memory experiment against a caller-chosen driver and per-round
/// schedule (which must match `mode`).
#[allow(clippy::too_many_arguments)]
pub fn run_memory_experiment_scheduled<T: Scalar, D: NoiseDriver<T>, R: Rng + ?Sized>(
    code: &RotatedSurfaceCode,
    basis: Basis,
    channel: &Channel,
    mode: Mode,
    schedule: &[ScheduleStep],
    epsilon: T,
    driver: &mut D,
    rng: &mut R,
) -> Result<SyndromeRecord> {
    channel.validate()?;
    if epsilon < T::zero() {
        return Err(PfsrError::InvalidParameter(format!(
            "truncation threshold must be nonnegative, got {epsilon}"
        )));
    }
    let n = match mode {
        Mode::Phenomenological => code.num_data_qubits(),
        _ => code.num_physical_qubits(),
    };
    let d = code.distance();
    let m = code.num_stabilizers();
    let mut st = prepare_logical_state::<T, R>(code, basis, n, rng)?;
    let mut runner = RoundRunner {
        code,
        ch: channel,
        driver,
        eps: epsilon,
        site: 0,
    };
    let mut rows: Vec<Vec<bool>> = Vec::with_capacity(d + 1);
    for _ in 0..d {
        let mut row = vec![false; m];
        runner.run_round(&mut st, mode, schedule, rng, &mut row)?;
        rows.push(row);
    }
    // Perfect round: transversal data readout. Basis-type stabilizers and the
    // logical operator collapse to parities of the data bits; the other type
    // is unobservable here and copies the previous round.
    let nd = code.num_data_qubits();
    let mut bits = vec![false; nd];
    for (k, b) in bits.iter_mut().enumerate() {
        let p = match basis {
            Basis::Z => PauliString::z_op(n, k),
            Basis::X => PauliString::x_op(n, k),
        };
        *b = st.measure_pauli(&p, rng, None)?.value == -1;
    }
    let relevant = match basis {
        Basis::Z => StabKind::Z,
        Basis::X => StabKind::X,
    };
    let mut last = rows[d - 1].clone();
    for (i, s) in code.stabilizers.iter().enumerate() {
        if s.kind == relevant {
            last[i] = s.support.iter().fold(false, |acc, &q| acc ^ bits[q]);
        }
    }
    rows.push(last);
    let logical = code
        .logical_support(basis)
        .iter()
        .fold(false, |acc, &q| acc ^ bits[q]);
    Ok(SyndromeRecord {
        d,
        basis,
        mode,
        rows,
        logical,
        max_entries: st.log().max_entries,
        truncation_fallbacks: st.log().truncation_fallbacks,
        weight: runner.driver.weight(),
    })
}

/// Memory experiment with the mode's standard schedule.
pub fn run_memory_experiment_with<T: Scalar, D: NoiseDriver<T>, R: Rng + ?Sized>(
    code: &RotatedSurfaceCode,
    basis: Basis,
    channel: &Channel,
    mode: Mode,
    epsilon: T,
    driver: &mut D,
    rng: &mut R,
) -> Result<SyndromeRecord> {
    let schedule = match mode {
        Mode::Phenomenological => phenomenological_schedule(code),
        Mode::CircuitLayered => circuit_level_schedule(code, true),
        Mode::CircuitParallel => circuit_level_schedule(code, false),
    };
    run_memory_experiment_scheduled(code, basis, channel, mode, &schedule, epsilon, driver, rng)
}

/// Memory experiment with exact channels, built from scratch.
pub fn run_memory_experiment<T: Scalar, R: Rng + ?Sized>(
    d: usize,
    basis: Basis,
    channel: &Channel,
    mode: Mode,
    epsilon: T,
    rng: &mut R,
) -> Result<SyndromeRecord> {
    let code = build_code(d)?;
    let mut driver = crate::noise::ExactDriver;
    run_memory_experiment_with(&code, basis, channel, mode, epsilon, &mut driver, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{ExactDriver, PtaDriver};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn build_code_validates_distance() {
        for bad in [0usize, 1, 2, 4, 6] {
            assert!(build_code(bad).is_err(), "d = {bad} should be rejected");
        }
        for good in [3usize, 5, 7] {
            assert!(build_code(good).is_ok());
        }
    }

    #[test]
    fn code_counts_match_formulas() {
        for d in [3usize, 5, 7] {
            let code = build_code(d).unwrap();
            assert_eq!(code.num_data_qubits(), d * d);
            assert_eq!(code.num_stabilizers(), d * d - 1);
            assert_eq!(code.num_physical_qubits(), 2 * d * d - 1);
            let weight2 = code
                .stabilizers()
                .iter()
                .filter(|s| s.support.len() == 2)
                .count();
            let weight4 = code
                .stabilizers()
                .iter()
                .filter(|s| s.support.len() == 4)
                .count();
            assert_eq!(weight2, 2 * (d - 1));
            assert_eq!(weight4, (d - 1) * (d - 1));
            let x_count = code
                .stabilizers()
                .iter()
                .filter(|s| s.kind == StabKind::X)
                .count();
            assert_eq!(x_count, (d * d - 1) / 2);
            for (i, s) in code.stabilizers().iter().enumerate() {
                assert_eq!(s.ancilla, d * d + i);
            }
        }
        assert_eq!(build_code(3).unwrap().num_physical_qubits(), 17);
        assert_eq!(build_code(5).unwrap().num_data_qubits(), 25);
        assert_eq!(build_code(5).unwrap().num_stabilizers(), 24);
    }

    #[test]
    fn stabilizers_commute_and_logicals_anticommute() {
        for d in [3usize, 5] {
            let code = build_code(d).unwrap();
            let n = code.num_data_qubits();
            let paulis: Vec<PauliString> = (0..code.num_stabilizers())
                .map(|i| code.stabilizer_pauli(i, n))
                .collect();
            for (i, a) in paulis.iter().enumerate() {
                for b in &paulis[i + 1..] {
                    assert!(a.commutes(b));
                }
                assert!(code.logical_x().commutes(a));
                assert!(code.logical_z().commutes(a));
            }
            assert!(!code.logical_x().commutes(code.logical_z()));
            // Straight boundary-to-boundary strings.
            let zs: Vec<usize> = (0..d).map(|r| r * d).collect();
            let xs: Vec<usize> = (0..d).collect();
            assert_eq!(code.logical_support(Basis::Z), zs);
            assert_eq!(code.logical_support(Basis::X), xs);
        }
    }

    #[test]
    fn d3_stabilizer_fixture() {
        let code = build_code(3).unwrap();
        let expect: [(StabKind, &[usize]); 8] = [
            (StabKind::Z, &[0, 1]),
            (StabKind::X, &[0, 1, 3, 4]),
            (StabKind::Z, &[1, 2, 4, 5]),
            (StabKind::X, &[2, 5]),
            (StabKind::X, &[3, 6]),
            (StabKind::Z, &[3, 4, 6, 7]),
            (StabKind::X, &[4, 5, 7, 8]),
            (StabKind::Z, &[7, 8]),
        ];
        assert_eq!(code.num_stabilizers(), expect.len());
        for (s, (kind, support)) in code.stabilizers().iter().zip(expect) {
            assert_eq!(s.kind, kind);
            assert_eq!(s.support, support);
        }
    }

    #[test]
    fn hook_safe_corner_orders() {
        let code = build_code(3).unwrap();
        // Bulk Z check (0,1): NW,NE,SW,SE.
        assert_eq!(
            code.stabilizers()[2].slots,
            [Some(1), Some(2), Some(4), Some(5)]
        );
        // Bulk X check (0,0): NW,SW,NE,SE.
        assert_eq!(
            code.stabilizers()[1].slots,
            [Some(0), Some(3), Some(1), Some(4)]
        );
        // Top boundary Z check keeps its surviving corners in slot position.
        assert_eq!(code.stabilizers()[0].slots, [None, None, Some(0), Some(1)]);
    }

    #[test]
    fn phenomenological_schedule_starts_at_the_corner() {
        let code = build_code(3).unwrap();
        let steps = phenomenological_schedule(&code);
        assert_eq!(steps[0].kind, StepKind::NoiseOn(vec![0, 1]));
        assert_eq!(steps[1].kind, StepKind::MeasureStabilizer(0));
        assert_eq!(steps[2].kind, StepKind::NoiseOn(vec![3, 4]));
        assert_eq!(steps[3].kind, StepKind::MeasureStabilizer(1));
        // Stabilizer 0 is the top-left Z check on qubits 0 and 1.
        assert_eq!(code.stabilizers()[0].kind, StabKind::Z);
        assert_eq!(code.stabilizers()[0].support, vec![0, 1]);
    }

    #[test]
    fn phenomenological_schedule_invariants() {
        for d in [3usize, 5, 7] {
            let code = build_code(d).unwrap();
            for order in [SweepOrder::RowMajor, SweepOrder::ColumnMajor] {
                let steps = phenomenological_schedule_in(&code, order);
                let mut noised = vec![0usize; code.num_data_qubits()];
                let mut measured = vec![0usize; code.num_stabilizers()];
                for step in &steps {
                    match &step.kind {
                        StepKind::NoiseOn(qs) => {
                            for &q in qs {
                                noised[q] += 1;
                            }
                        }
                        StepKind::MeasureStabilizer(i) => {
                            measured[*i] += 1;
                            // Noise-before-measure for the whole support.
                            for &q in &code.stabilizers()[*i].support {
                                assert_eq!(noised[q], 1, "qubit {q} measured before noise");
                            }
                        }
                        _ => panic!("unexpected step in phenomenological schedule"),
                    }
                }
                assert!(noised.iter().all(|&c| c == 1));
                assert!(measured.iter().all(|&c| c == 1));
            }
        }
    }

    #[test]
    fn schedule_dump_golden() {
        let code = build_code(3).unwrap();
        let text = dump_schedule(&phenomenological_schedule(&code));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 14);
        assert_eq!(
            &lines[..6],
            &[
                "noise 0 1",
                "measure 0",
                "noise 3 4",
                "measure 1",
                "noise 2 5",
                "measure 2"
            ]
        );
        let layered = dump_schedule(&circuit_level_schedule(&code, true));
        assert!(layered.starts_with("cycle 0\n"));
        let parallel = dump_schedule(&circuit_level_schedule(&code, false));
        assert!(parallel.starts_with("layer H(10)"));
    }

    #[test]
    fn layered_schedule_is_one_cycle_per_stabilizer() {
        let code = build_code(3).unwrap();
        let steps = circuit_level_schedule(&code, true);
        assert_eq!(steps.len(), 8);
        for (i, step) in steps.iter().enumerate() {
            assert_eq!(step.kind, StepKind::AncillaCycle(i));
        }
    }

    #[test]
    fn parallel_schedule_layers_are_conflict_free() {
        for d in [3usize, 5] {
            let code = build_code(d).unwrap();
            let steps = circuit_level_schedule(&code, false);
            let m = code.num_stabilizers();
            assert_eq!(steps.len(), 6 + m);
            let mut cnots = 0usize;
            for step in &steps {
                if let StepKind::GateLayer(gs) = &step.kind {
                    let mut seen = std::collections::BTreeSet::new();
                    for g in gs {
                        let (a, b) = g.qubits();
                        assert!(seen.insert(a), "qubit {a} reused within a layer");
                        if let Some(b) = b {
                            assert!(seen.insert(b), "qubit {b} reused within a layer");
                        }
                        if matches!(g, Gate::Cnot(_, _)) {
                            cnots += 1;
                        }
                    }
                }
            }
            let weight_sum: usize = code.stabilizers().iter().map(|s| s.support.len()).sum();
            assert_eq!(cnots, weight_sum);
        }
    }

    #[test]
    fn prepared_states_stabilize_and_carry_the_logical() {
        let mut rng = StdRng::seed_from_u64(70);
        let code = build_code(3).unwrap();
        let n = code.num_data_qubits();
        let st = prepare_logical_state::<f64, _>(&code, Basis::Z, n, &mut rng).unwrap();
        for i in 0..code.num_stabilizers() {
            let e = st.expectation_pauli(&code.stabilizer_pauli(i, n)).unwrap();
            assert!((e - 1.0).abs() < 1e-9);
        }
        let zl = st.expectation_pauli(&code.logical_pauli(Basis::Z, n)).unwrap();
        assert!((zl - 1.0).abs() < 1e-9);
        assert_eq!(st.num_entries(), 1);

        let st = prepare_logical_state::<f64, _>(&code, Basis::X, n, &mut rng).unwrap();
        for i in 0..code.num_stabilizers() {
            let e = st.expectation_pauli(&code.stabilizer_pauli(i, n)).unwrap();
            assert!((e - 1.0).abs() < 1e-9);
        }
        let xl = st.expectation_pauli(&code.logical_pauli(Basis::X, n)).unwrap();
        assert!((xl - 1.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_round_reads_all_plus_one() {
        let mut rng = StdRng::seed_from_u64(71);
        let code = build_code(3).unwrap();
        let n = code.num_data_qubits();
        let mut st = prepare_logical_state::<f64, _>(&code, Basis::Z, n, &mut rng).unwrap();
        let row = run_phenomenological_round(&mut st, &code, None, 0.0, &mut rng).unwrap();
        assert!(row.iter().all(|&b| !b));
        // The state is untouched: stabilizers still +1 deterministically.
        for i in 0..code.num_stabilizers() {
            let e = st.expectation_pauli(&code.stabilizer_pauli(i, n)).unwrap();
            assert!((e - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_bulk_fault_lights_exactly_its_checks() {
        let mut rng = StdRng::seed_from_u64(72);
        let code = build_code(3).unwrap();
        let n = code.num_data_qubits();
        // X on the center qubit flips the two adjacent Z checks.
        let mut st = prepare_logical_state::<f64, _>(&code, Basis::Z, n, &mut rng).unwrap();
        st.apply_pauli(&PauliString::x_op(n, 4)).unwrap();
        let row = run_phenomenological_round(&mut st, &code, None, 0.0, &mut rng).unwrap();
        let lit: Vec<usize> = (0..row.len()).filter(|&i| row[i]).collect();
        assert_eq!(lit, vec![2, 5]);
        // Z on the center qubit flips the two adjacent X checks.
        let mut st = prepare_logical_state::<f64, _>(&code, Basis::Z, n, &mut rng).unwrap();
        st.apply_pauli(&PauliString::z_op(n, 4)).unwrap();
        let row = run_phenomenological_round(&mut st, &code, None, 0.0, &mut rng).unwrap();
        let lit: Vec<usize> = (0..row.len()).filter(|&i| row[i]).collect();
        assert_eq!(lit, vec![1, 6]);
    }

    #[test]
    fn circuit_extraction_matches_direct_stabilizer_readout() {
        let code = build_code(3).unwrap();
        let n = code.num_physical_qubits();
        let quiet = Channel::Depolarizing(0.0);
        for mode in [Mode::CircuitLayered, Mode::CircuitParallel] {
            let schedule = match mode {
                Mode::CircuitLayered => circuit_level_schedule(&code, true),
                _ => circuit_level_schedule(&code, false),
            };
            for (fault, expect) in [
                (PauliString::x_op(n, 4), vec![2usize, 5]),
                (PauliString::z_op(n, 4), vec![1usize, 6]),
            ] {
                let mut rng = StdRng::seed_from_u64(73);
                let mut st =
                    prepare_logical_state::<f64, _>(&code, Basis::Z, n, &mut rng).unwrap();
                st.apply_pauli(&fault).unwrap();
                let mut driver = ExactDriver;
                let mut runner = RoundRunner {
                    code: &code,
                    ch: &quiet,
                    driver: &mut driver,
                    eps: 0.0,
                    site: 0,
                };
                let mut row = vec![false; code.num_stabilizers()];
                runner
                    .run_round(&mut st, mode, &schedule, &mut rng, &mut row)
                    .unwrap();
                let lit: Vec<usize> = (0..row.len()).filter(|&i| row[i]).collect();
                assert_eq!(lit, expect, "{mode:?} fault {fault}");
            }
        }
    }

    #[test]
    fn noiseless_memory_experiment_is_silent() {
        let quiet = Channel::Depolarizing(0.0);
        for mode in [
            Mode::Phenomenological,
            Mode::CircuitLayered,
            Mode::CircuitParallel,
        ] {
            for basis in [Basis::Z, Basis::X] {
                let mut rng = StdRng::seed_from_u64(74);
                let rec = run_memory_experiment::<f64, _>(3, basis, &quiet, mode, 0.0, &mut rng)
                    .unwrap();
                assert_eq!(rec.rows.len(), 4);
                assert!(rec.rows.iter().all(|r| r.len() == 8));
                assert!(
                    rec.rows.iter().all(|r| r.iter().all(|&b| !b)),
                    "{mode:?}/{basis:?} produced events without noise"
                );
                assert!(!rec.logical);
                assert_eq!(rec.max_entries, 1);
                assert_eq!(rec.weight, 1.0);
            }
        }
    }

    #[test]
    fn pauli_noise_keeps_a_single_entry() {
        let code = build_code(3).unwrap();
        let ch = Channel::Depolarizing(0.2);
        for mode in [
            Mode::Phenomenological,
            Mode::CircuitLayered,
            Mode::CircuitParallel,
        ] {
            let mut rng = StdRng::seed_from_u64(75);
            for _ in 0..20 {
                let mut driver = ExactDriver;
                let rec = run_memory_experiment_with::<f64, _, _>(
                    &code, Basis::Z, &ch, mode, 0.0, &mut driver, &mut rng,
                )
                .unwrap();
                assert_eq!(rec.max_entries, 1, "{mode:?} grew the sparse map");
            }
            // PTA realizations of a non-Pauli channel stay Pauli too.
            let mut rng = StdRng::seed_from_u64(76);
            let mut driver = PtaDriver;
            let rec = run_memory_experiment_with::<f64, _, _>(
                &code,
                Basis::Z,
                &Channel::AmplitudeDamping(0.2),
                mode,
                0.0,
                &mut driver,
                &mut rng,
            )
            .unwrap();
            assert_eq!(rec.max_entries, 1);
        }
    }

    #[test]
    fn phenomenological_ad_entry_growth_is_bounded() {
        let code = build_code(3).unwrap();
        let ch = Channel::AmplitudeDamping(0.15);
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..20 {
            let mut driver = ExactDriver;
            let rec = run_memory_experiment_with::<f64, _, _>(
                &code,
                Basis::Z,
                &ch,
                Mode::Phenomenological,
                0.0,
                &mut driver,
                &mut rng,
            )
            .unwrap();
            assert!(rec.max_entries <= 8, "entry count {}", rec.max_entries);
        }
    }

    /// Detection-event marginals are insensitive to the sweep order.
    #[test]
    fn sweep_order_does_not_change_event_statistics() {
        let code = build_code(3).unwrap();
        let ch = Channel::AmplitudeDamping(0.15);
        let shots = 10_000usize;
        let m = code.num_stabilizers();
        let d = code.distance();
        let mut counts = [vec![0u32; (d + 1) * m], vec![0u32; (d + 1) * m]];
        for (which, order) in [SweepOrder::RowMajor, SweepOrder::ColumnMajor]
            .into_iter()
            .enumerate()
        {
            let schedule = phenomenological_schedule_in(&code, order);
            let mut rng = StdRng::seed_from_u64(80 + which as u64);
            for _ in 0..shots {
                let mut driver = ExactDriver;
                let rec = run_memory_experiment_scheduled::<f64, _, _>(
                    &code,
                    Basis::Z,
                    &ch,
                    Mode::Phenomenological,
                    &schedule,
                    0.0,
                    &mut driver,
                    &mut rng,
                )
                .unwrap();
                let mut prev = vec![false; m];
                for (r, row) in rec.rows.iter().enumerate() {
                    for i in 0..m {
                        if row[i] ^ prev[i] {
                            counts[which][r * m + i] += 1;
                        }
                    }
                    prev = row.clone();
                }
            }
        }
        let mut chi2 = 0.0f64;
        let mut cells = 0usize;
        for (a, b) in counts[0].iter().zip(&counts[1]) {
            let (a, b) = (*a as f64, *b as f64);
            if a + b > 0.0 {
                chi2 += (a - b) * (a - b) / (a + b);
                cells += 1;
            }
        }
        // Far tail of chi-squared with ~32 degrees of freedom.
        let bound = 2.0 * cells as f64 + 40.0;
        assert!(chi2 < bound, "chi2 {chi2} over {cells} cells");
    }

    #[test]
    fn record_csv_shape() {
        let mut rng = StdRng::seed_from_u64(81);
        let rec = run_memory_experiment::<f64, _>(
            3,
            Basis::Z,
            &Channel::Depolarizing(0.05),
            Mode::Phenomenological,
            0.0,
            &mut rng,
        )
        .unwrap();
        let lines = rec.csv_lines();
        assert_eq!(lines.len(), 4 * 8);
        assert!(lines[0].starts_with("0,0,"));
        assert!(lines.last().unwrap().starts_with("3,7,"));
    }
}
