use thiserror::Error;

/// Errors produced by the sampler, the checks and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("point is not a member of the body")]
    NotInBody,

    #[error("no chord bracket found within distance {limit}")]
    BracketNotFound { limit: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("enumerating {count:.3e} multi-indices exceeds the cap of {cap}; use sample_multi_index instead")]
    EnumerationCap { count: f64, cap: u64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no admissible subset with {s} < Q(A) <= 1/2")]
    NoAdmissibleSubset { s: f64 },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

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

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
