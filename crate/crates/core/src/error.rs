use thiserror::Error;

/// Errors raised by the estimators, samplers and oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unknown distribution `{0}`")]
    UnknownDistribution(String),

    #[error("moment of order {p} does not exist for a law with {nu} degrees of freedom")]
    MomentDoesNotExist { p: f64, nu: f64 },

    #[error("degenerate direction: the zero vector has no marginal law")]
    DegenerateDirection,

    #[error("exponent {0} is not supported by this scalar type")]
    UnsupportedExponent(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
