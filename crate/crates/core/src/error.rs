use thiserror::Error;

use crate::kernels::Family;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("family '{0}' is a counterexample kernel and is not supported here")]
    UnsupportedFamily(Family),

    #[error("negative time argument: {0}")]
    NegativeTime(f64),

    #[error("invalid grid parameters: {0}")]
    InvalidGridParams(String),

    #[error(
        "covariance matrix is not positive definite: pivot {pivot_index} = {pivot_value:e} (threshold {threshold:e})"
    )]
    NotPositiveDefinite { pivot_index: usize, pivot_value: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sigma^2 must be positive, got {0}")]
    NonPositiveSigma2(f64),

    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),

    #[error("empty sample")]
    EmptySample,

    #[error("need at least {needed} observations, got {found}")]
    InsufficientObservations { needed: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
