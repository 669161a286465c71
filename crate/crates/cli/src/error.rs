use landau_core::LandauError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or input names; exit code 2.
    #[error("{0}")]
    Usage(String),

    /// A failure while running; exit code 1.
    #[error("{0}")]
    Runtime(String),

    #[error(transparent)]
    Core(#[from] LandauError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_usage() => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
