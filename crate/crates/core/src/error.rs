use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("spectral density evaluated at negative frequency {0}")]
    NegativeFrequency(f64),

    #[error("derivative of the sub-ohmic density diverges at omega = 0")]
    DerivativePole,

    #[error("frequency {omega} lies outside the tabulated range [{lo}, {hi}]")]
    OutsideTable { omega: f64, lo: f64, hi: f64 },

    #[error("pole at {0} coincides with an integration boundary")]
    PoleOnBoundary(f64),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {value}, error {error})")]
    NoConvergence {
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("truncated space of dimension {dim} exceeds the configured bound {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("norm drifted by {drift:e} at t = {t}")]
    NormDrift { t: f64, drift: f64 },

    #[error("malformed table line {line}: {reason}")]
    Table { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
