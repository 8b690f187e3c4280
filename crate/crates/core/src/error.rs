use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("circulant embedding failed: eigenvalue {min_eigenvalue:e} below -{tolerance:e} (relative)")]
    EmbeddingFailure { min_eigenvalue: f64, tolerance: f64 },

    #[error("size {requested} exceeds the limit of {limit}")]
    SizeLimit { requested: usize, limit: usize },

    #[error("time {t} is not on the grid (dt = {dt})")]
    OffGrid { t: f64, dt: f64 },

    #[error("time {t} lies outside the sampled window [{start}, {end}]")]
    OutOfWindow { t: f64, start: f64, end: f64 },

    #[error("lattice size mismatch: expected half-width {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value produced by the nonlinearity at site {site}")]
    Overflow { site: i64 },

    #[error("solution blew up at t = {t}: |v| = {norm:e}")]
    BlowUp { t: f64, norm: f64 },

    #[error("insufficient past horizon {horizon}: tail factor {tail:e} exceeds {tolerance:e}")]
    InsufficientHorizon { horizon: f64, tail: f64, tolerance: f64 },

    #[error("pullback horizon exhausted at T = {horizon} (window reaches back to {available})")]
    HorizonExhausted { horizon: f64, available: f64 },

    #[error("{0}")]
    Misuse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
