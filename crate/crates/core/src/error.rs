use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {len}: {reason}")]
    InvalidDimension { len: usize, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("concentration is undefined for the zero signal")]
    ZeroSignal,

    #[error("{solver} did not converge: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Convergence {
        solver: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("malformed signal file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}
