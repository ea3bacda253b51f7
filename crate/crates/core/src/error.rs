use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid exponent p = {0}: need 1 <= p <= inf")]
    InvalidExponent(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("derivative order {0} exceeds 4")]
    DerivativeOrder(usize),
    #[error("density vanishes at t = {0} inside the bump support")]
    ZeroDensity(f64),
    #[error("rejection sampler exceeded {0} tries")]
    RejectionCap(usize),
    #[error("perturbation is not monotone: |r*phi'| reaches {0}")]
    NotMonotone(f64),
    #[error("scheme constraint violated: {0}")]
    Constraint(String),
    #[error("exact enumeration needs at most 24 active coordinates, got {0}")]
    TooManyActive(usize),
    #[error("density unavailable: {0}")]
    DensityUnavailable(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("unknown claim id `{0}`")]
    UnknownClaim(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
