use thiserror::Error;

/// Errors raised by the core solvers and oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("case mismatch: {0}")]
    CaseMismatch(String),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("state integrity violated: {0}")]
    Integrity(String),

    #[error("time-stepping failed: {0}")]
    Scheme(String),

    #[error("relaxation diverged: {0}")]
    Relaxation(String),

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("class mismatch: {0}")]
    ClassMismatch(String),

    #[error("flux validation failed: {0}")]
    Flux(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
