use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the read-channel pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An input buffer had the wrong length or shape for the operation.
    #[error("input shape: {0}")]
    Shape(String),

    /// A configuration value is inconsistent or out of range.
    #[error("configuration: {0}")]
    Config(String),

    /// A probability or other numeric input violated its domain.
    #[error("invalid input: {0}")]
    Input(String),

    /// A modulation-code stream could not be framed into codewords.
    #[error("framing: {0}")]
    Framing(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
