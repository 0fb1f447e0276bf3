use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pivot breakdown at elimination step {step}: |pivot| = {pivot:e} below threshold {threshold:e}")]
    PivotBreakdown { step: usize, pivot: f64, threshold: f64 },

    #[error("singular diagonal entry at index {index}: |d| = {value:e}")]
    SingularDiagonal { index: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown cluster id {0}")]
    UnknownCluster(usize),

    #[error("structure violation: {0}")]
    StructureViolation(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("work-count overflow")]
    Overflow,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
