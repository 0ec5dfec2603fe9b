use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AtlasError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The input files are well formed but describe an inconsistent graph.
    #[error("data error: {0}")]
    Data(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged: {0}")]
    Diverged(String),
}

impl AtlasError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AtlasError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        AtlasError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by user-supplied data rather than parameters.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            AtlasError::Parse { .. } | AtlasError::Io { .. } | AtlasError::Data(_)
        )
    }
}
