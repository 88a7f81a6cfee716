use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ResistError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A file could not be read, decoded, or did not match what the manifest promised.
    #[error("failed to load {path}: {message}")]
    Load { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl ResistError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ResistError::InvalidArgument(msg.into())
    }

    pub(crate) fn load(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        ResistError::Load {
            path: path.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ResistError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            ResistError::InvalidArgument(_) | ResistError::Config(_) => 1,
            ResistError::ShapeMismatch(_) | ResistError::Load { .. } | ResistError::Io { .. } => 2,
            ResistError::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, ResistError>;
