use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("decoding requires alpha < 0.5, got {0}")]
    UnsupportedAlpha(f64),

    #[error("not a valid FOFE code: {0}")]
    InvalidCode(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("conflicting data: {0}")]
    Conflict(String),

    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("model not initialized: {0}")]
    Uninitialized(String),

    #[error("bad model container: {0}")]
    Container(String),

    #[error("bad config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable short name used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::UnsupportedAlpha(_) => "unsupported-alpha",
            Error::InvalidCode(_) => "invalid-code",
            Error::NotFound(_) => "not-found",
            Error::Parse { .. } => "parse",
            Error::Conflict(_) => "conflict",
            Error::TrainingDiverged(_) => "training-diverged",
            Error::Uninitialized(_) => "uninitialized-model",
            Error::Container(_) => "container",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
