use thiserror::Error;

/// Errors raised by the bound computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A model covariance failed its Cholesky factorization.
    #[error("covariance at subcarrier alpha = {alpha} is not positive definite")]
    NotPositiveDefinite { alpha: f64 },

    /// The angle Jacobian 2π·d/λ·sin θ vanishes (endfire path).
    #[error("angle Jacobian is singular for path {path} (sin θ = 0)")]
    AngleJacobianSingular { path: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
