use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data (dimension mismatch, empty block, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A run or plan configuration violates a constraint.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterate left the finite range.
    #[error("non-finite iterate at step {step}")]
    NonFinite { step: u64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    /// The requested quantity has no closed form for this potential.
    #[error("{0} is unavailable for this potential")]
    Unavailable(&'static str),

    /// The runtime guard refused a run.
    #[error("refused: run needs {estimate} gradient evaluations, cap is {cap}")]
    Refused { estimate: u128, cap: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
