use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("format error: {0}")]
    Format(String),

    /// A parameter or objective value became NaN or infinite during training.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A statistic is mathematically undefined for the given input.
    #[error("undefined: {0}")]
    Undefined(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
