use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical precondition was violated (e.g. `gamma <= 1`).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid experiment configuration. `key` names the offending field.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("state budget exceeded: {states} distinct states at t={step} (limit {limit})")]
    BudgetExceeded { states: usize, step: u64, limit: usize },

    #[error("insufficient data: {usable} usable checkpoints, need at least {needed}")]
    InsufficientData { usable: usize, needed: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }
}
