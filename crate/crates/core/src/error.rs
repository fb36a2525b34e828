use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("divergent input: {0}")]
    DivergentInput(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("overflow risk: {0}")]
    OverflowRisk(String),

    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("cost guard: {0}")]
    CostGuard(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
