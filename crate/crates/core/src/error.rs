//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LandauError {
    /// Invalid parameters or an unusable configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A configuration file that could not be parsed.
    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A density model lacks an operation the caller needs.
    #[error("capability error: {0}")]
    Capability(String),

    /// A quadrature grid does not capture enough of the mass.
    #[error("coverage error: grid captures mass {mass:.12}, at least {required} required")]
    Coverage { mass: f64, required: f64 },

    /// The integrator produced a non-finite velocity.
    #[error("integration blowup at step {step}")]
    Blowup { step: u64 },

    /// Every pair of points coincides.
    #[error("degenerate cloud: {0}")]
    DegenerateCloud(String),

    /// A requested time does not coincide with a stored snapshot.
    #[error("interpolation error: {0}")]
    Interpolation(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl LandauError {
    /// Whether the error stems from user input (configuration or usage) rather
    /// than a failure during a run.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            LandauError::Config(_) | LandauError::ConfigParse { .. } | LandauError::Precondition(_)
        )
    }
}

impl From<serde_json::Error> for LandauError {
    fn from(e: serde_json::Error) -> Self {
        LandauError::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LandauError>;
