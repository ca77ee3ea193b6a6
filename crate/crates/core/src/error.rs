use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum FellerError {
    /// A parameter lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The model or experiment is misconfigured.
    #[error("configuration error: {0}")]
    Config(String),

    /// An expression string failed to parse.
    #[error("expression error at offset {offset}: {message}")]
    Expression { offset: usize, message: String },

    /// A numerical procedure did not reach its tolerance.
    #[error("numerical failure: {message} (achieved error estimate {error_estimate:e})")]
    Numerical { message: String, error_estimate: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = FellerError> = std::result::Result<T, E>;

impl FellerError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Self::Precondition(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }
}
