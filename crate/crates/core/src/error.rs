use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or stimulus; maps to CLI exit status 2.
    #[error("configuration error: {0}")]
    Config(String),

    /// An internal invariant of the digital logic was violated.
    #[error("logic error: {0}")]
    Logic(String),

    #[error("encoding mismatch: expected {expected}, found {found}")]
    EncodingMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("word width mismatch: {left} bits vs {right} bits")]
    WidthMismatch { left: u32, right: u32 },

    #[error("insufficient samples: need {needed}, have {available}")]
    InsufficientSamples { needed: usize, available: usize },

    #[error("simulation diverged: {0}")]
    Unstable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn logic(msg: impl Into<String>) -> Self {
        Error::Logic(msg.into())
    }
}
