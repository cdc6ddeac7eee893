use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("count mismatch: header declares {declared} records, found {found}")]
    CountMismatch { declared: usize, found: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty foreground mask")]
    EmptyForeground,
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("backfacing direction (cosine {0})")]
    Backfacing(f64),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("malformed PFM: {0}")]
    Pfm(String),
    #[error("png encoding failed: {0}")]
    Png(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
