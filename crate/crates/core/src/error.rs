use std::path::PathBuf;

use crate::engine::ErrorTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A non-finite value appeared in the iterate. The trace up to and
    /// including the offending iteration is kept.
    #[error("diverged at iteration {iteration}")]
    Diverged {
        iteration: usize,
        trace: Box<ErrorTrace>,
    },

    #[error("unsupported bundle version {found:?} (expected {expected:?})")]
    UnsupportedVersion { found: String, expected: String },

    #[error("size mismatch: {field} (expected {expected} bytes, found {found})")]
    SizeMismatch {
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("malformed manifest field {field}: {reason}")]
    Manifest { field: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
