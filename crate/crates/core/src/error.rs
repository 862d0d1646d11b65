use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmcError {
    #[error("invalid dimensions: {0}")]
    Dimension(String),
    #[error("index {index} out of bounds for length {bound}")]
    OutOfBounds { index: usize, bound: usize },
    #[error("duplicate index {0}")]
    DuplicateIndex(usize),
    #[error("entry ({0}, {1}) has not been observed")]
    Unobserved(usize, usize),
    #[error("row set does not determine coefficients (restricted basis is rank deficient)")]
    RankDeficient,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("estimate only: {0}")]
    EstimateOnly(String),
    #[error("cost model mismatch: {0}")]
    CostModel(String),
    #[error("unknown name: {0}")]
    UnknownName(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, AmcError>;

impl From<std::io::Error> for AmcError {
    fn from(e: std::io::Error) -> Self {
        AmcError::Io(e.to_string())
    }
}
