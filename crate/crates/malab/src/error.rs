use thiserror::Error;

/// Errors shared across the crate. Check operations report failures inside
/// their report types; errors are reserved for violated preconditions,
/// malformed inputs and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("argument outside grid range: {0}")]
    OutOfRange(String),

    #[error("degenerate truncation: min(f,j)·m vanishes")]
    DegenerateTruncation,

    #[error("target measure is unsolvable: {0}")]
    Unsolvable(String),

    #[error("mass normalization error: {0}")]
    NormalizationError(String),

    #[error("normalizing supremum not bracketed by the grid: {0}")]
    GridTooNarrow(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("model violation: {0}")]
    ModelViolation(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("construction failure: {0}")]
    ConstructionFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
