use thiserror::Error;

/// Errors returned across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The requested quantity has no closed form for this family; callers
    /// fall back to Monte Carlo.
    #[error("no exact oracle: {0}")]
    NoExactOracle(String),

    #[error("singular covariance (condition number {0:.3e})")]
    SingularCovariance(f64),

    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
