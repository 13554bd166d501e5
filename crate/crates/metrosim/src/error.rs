//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across the linear-algebra, model, dynamics,
/// estimation, optimizer and CLI layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix or vector had a dimension other than the one required.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An operation requiring a Hermitian input received a matrix whose
    /// largest deviation |m[i][j] - conj(m[j][i])| exceeded the tolerance.
    #[error("matrix is not Hermitian: max asymmetry {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },

    /// A Hamiltonian description was internally inconsistent.
    #[error("invalid Hamiltonian: {0}")]
    InvalidSpec(String),

    /// A state, probe or measurement failed validation.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A probability left the admissible interval by more than round-off.
    #[error("probability {0} outside [0, 1] beyond tolerance")]
    InvalidProbability(f64),

    /// The requested integration was too coarse for the target accuracy.
    #[error("integration too coarse: {0}")]
    StepCount(String),

    /// Fisher information vanished: the parameter leaves no imprint on the
    /// chosen probe/measurement and no finite bound exists.
    #[error("parameter is unestimable: Fisher information is zero")]
    Unestimable,

    /// The closed-form bound diverges at the requested point.
    #[error("closed-form bound diverges: {0}")]
    Divergence(String),

    /// Optimizer or run configuration was unusable.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
