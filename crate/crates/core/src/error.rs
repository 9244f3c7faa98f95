use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid dimension {0}: must be at least 2")]
    InvalidDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("validity check failed: {0}")]
    Validity(String),

    #[error("integrator aborted at t = {t:.6} ns: {reason}")]
    Integrator { t: f64, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the failure comes from the numerics rather than from user input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Integrator { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
