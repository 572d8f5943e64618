use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent dimensions, bad option values, unknown keys.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric error in parameter {param}: {detail}")]
    Numeric { param: String, detail: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: byte {offset}: {detail}")]
    Format {
        path: PathBuf,
        offset: u64,
        detail: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A training run hit a non-finite loss.
    #[error("run aborted at epoch {epoch}: {detail}")]
    Aborted { epoch: usize, detail: String },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, offset: u64, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            offset,
            detail: detail.into(),
        }
    }
}
