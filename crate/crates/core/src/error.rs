use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by frontends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad input data or configuration contents.
    Data,
    /// Filesystem, process or service failures.
    Environment,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: malformed record: {message}", path.display())]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate document id {id:?} ({}:{line})", path.display())]
    DuplicateId {
        id: String,
        path: PathBuf,
        line: usize,
    },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("cannot fingerprint: {0}")]
    Fingerprint(String),

    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),

    #[error("invalid banding scheme: {0}")]
    Banding(String),

    #[error("index: {0}")]
    Index(String),

    #[error("unknown source {0:?}")]
    UnknownSource(String),

    #[error("document {id:?} has no quality score")]
    MissingScore { id: String },

    #[error("document {id:?} is missing required field {field}")]
    MissingField { id: String, field: &'static str },

    #[error("scorer failed: {0}")]
    Scorer(String),

    #[error("invalid mixture: {0}")]
    Mixture(String),

    #[error("stage {stage}{}: {source}", scope.as_deref().map(|s| format!(" (source {s})")).unwrap_or_default())]
    Stage {
        stage: String,
        scope: Option<String>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } | Error::Scorer(_) => ErrorCategory::Environment,
            Error::Stage { source, .. } => source.category(),
            _ => ErrorCategory::Data,
        }
    }
}
