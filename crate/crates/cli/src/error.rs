use thiserror::Error;

/// Failure of a command, carrying its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    BadInput(String),

    #[error("{0}")]
    Indeterminate(String),

    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadInput(_) => 1,
            CliError::Indeterminate(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<sigmaflow_core::Error> for CliError {
    fn from(e: sigmaflow_core::Error) -> Self {
        use sigmaflow_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParameter(_)
            | E::Domain { .. }
            | E::CaseMismatch(_)
            | E::ClassMismatch(_)
            | E::Flux(_)
            | E::Parse(_) => CliError::BadInput(msg),
            E::Io(_) | E::Csv(_) | E::Json(_) => CliError::BadInput(msg),
            E::Inconsistency(_)
            | E::Integrity(_)
            | E::Scheme(_)
            | E::Relaxation(_)
            | E::InsufficientResolution(_) => CliError::Numeric(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::BadInput(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::BadInput(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
