use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Cholesky factorization failed (last jitter tried: {jitter:e})")]
    Cholesky { jitter: f64 },

    #[error("bound evaluation failed: {0}")]
    Bounds(String),

    #[error("inference failed: {0}")]
    Inference(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("problem catalog check failed: {0}")]
    Catalog(String),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Cholesky { .. } | Error::Inference(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
