use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("seed '{0}' not in embedding vocabulary")]
    SeedNotInVocabulary(String),

    #[error("degenerate segment labels: {0}")]
    DegenerateLabels(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite parameters after epoch {epoch}")]
    NonFinite { epoch: usize },

    #[error("no results")]
    NoResults,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("malformed data: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
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

    /// True when the failure came from the filesystem rather than from the
    /// data or the arguments.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
