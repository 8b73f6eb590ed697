use thiserror::Error;

/// Errors raised by the market-clearing engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse case file: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid case at `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("market case id must be in 1..=6, got {0}")]
    MarketCaseOutOfRange(u8),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("program has no row labelled `{0}`")]
    MissingRow(String),

    #[error("program has no variable named `{0}`")]
    MissingVariable(String),

    #[error("solution is not optimal (status: {0})")]
    NotOptimal(String),

    #[error("no feasible commitment: {0}")]
    Infeasible(String),

    #[error("exhaustive enumeration is capped at {cap} binaries, program has {found}")]
    TooManyBinaries { cap: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}
