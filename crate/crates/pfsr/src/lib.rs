//! Sparse Pauli-frame simulation of stabilizer circuits extended with
//! non-Clifford gates and non-Pauli noise.
//!
//! A state on `n` qubits is stored as a *frame* of `n` independent, pairwise
//! commuting Pauli operators together with a sparse map from frame labels to
//! (amplitude, Pauli history) pairs: `|psi> = sum_s alpha_s P_s |0_frame>`,
//! where `|0_frame>` is the joint +1 eigenstate of the frame. Clifford gates
//! and Pauli channels act in O(poly n) per map entry; non-Clifford unitaries
//! and non-Pauli channels enter as Pauli-sum (Kraus) updates that can grow the
//! map, with the entry count tracking how far the state strays from a
//! stabilizer state.
//!
//! On top of the state engine the crate provides the rotated surface code,
//! phenomenological and circuit-level syndrome-extraction schedules, exact and
//! Pauli-twirled noise channels, a unit-weight matching decoder, Monte Carlo
//! logical-rate and threshold estimation, and a fault-count importance
//! sampler for low physical error rates.
//!
//! Amplitude arithmetic is generic over the floating-point scalar through
//! [`scalar::Scalar`]; `f64` aliases are exported at the crate root.

pub mod bits;
pub mod decoder;
pub mod dense;
pub mod experiment;
pub mod montecarlo;
pub mod noise;
pub mod oracle;
pub mod pauli;
pub mod scalar;
pub mod state;
pub mod surface;
pub mod tableau;

#[cfg(test)]
pub(crate) mod testutil;

pub use bits::BitString;
pub use pauli::PauliString;
pub use scalar::Scalar;
pub use state::PfsrState;
pub use tableau::{CliffordTableau, Gate};

use thiserror::Error;

/// Errors surfaced by state, algebra, and sampling operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum PfsrError {
    #[error("operator length {got} does not match qubit count {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator does not commute with the frame generator set")]
    NotInGroup,
    #[error("generator set is dependent or does not satisfy the required commutation relations")]
    BadGenerators,
    #[error("state requires at least one qubit")]
    EmptyState,
    #[error("forced measurement outcome has probability {probability:.3e}")]
    ImpossiblePostselection { probability: f64 },
    #[error("states live in different frames")]
    IncompatibleFrame,
    #[error("operation changed the norm to {norm:.6e} without renormalize set")]
    NormDrift { norm: f64 },
    #[error("expected a Hermitian Pauli operator, got phase i^{phase}")]
    NonHermitian { phase: u8 },
    #[error("dense conversion of {qubits} qubits exceeds the oracle cap {cap}")]
    OracleCapExceeded { qubits: usize, cap: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("could not parse Pauli literal: {0}")]
    ParseError(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, PfsrError>;

/// Double-precision simulator state, the type used by the experiment layer.
pub type PfsrState64 = PfsrState<f64>;
/// Single-precision simulator state.
pub type PfsrState32 = PfsrState<f32>;
/// Double-precision dense statevector, used as an oracle bridge.
pub type DenseState64 = dense::DenseState<f64>;
