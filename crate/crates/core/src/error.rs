use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular (zero pivot at elimination step {step})")]
    Singular { step: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("mode `{0}` registered twice")]
    DuplicateMode(String),
    #[error("expressions belong to different mode registries")]
    RegistryMismatch,
    #[error("truncation must be at least 2 per mode (got {0})")]
    TruncationTooSmall(usize),
    #[error("expected {expected} truncation dimensions, got {got}")]
    TruncationArity { expected: usize, got: usize },
    #[error("Hilbert-space dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },
}
