use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the anonymisation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value (alpha range, frame geometry, LPC order, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Input that violates a structural contract, e.g. a pole set that is not
    /// closed under conjugation or frames of the wrong length.
    #[error("structural error: {0}")]
    Structural(String),

    /// Non-finite values or an unstable filter.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Audio that cannot be processed as given (wrong sample rate, length mismatch).
    #[error("input error: {0}")]
    Input(String),

    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),

    #[error("WAV decode error: {0}")]
    Decode(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
