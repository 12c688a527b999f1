use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid app directory name {0:?}: expected <sha256>__<package_id>")]
    AppDirName(String),

    #[error("invalid sha256 {0:?}")]
    Sha256(String),

    #[error("no app directories found under {0}")]
    NoApps(PathBuf),

    #[error("OCR command {0:?} is not executable")]
    OcrUnavailable(String),

    #[error("empty token")]
    EmptyToken,

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("document {0:?} has no tokens")]
    EmptyDocument(String),

    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("app {0:?} has an empty topic assignment")]
    EmptyAssignment(String),

    #[error("topic {0} has no label")]
    UnlabeledTopic(usize),

    #[error("no reference category for app {0:?}")]
    MissingReference(String),

    #[error("theta row must sum to 1, got {0}")]
    NotNormalized(f64),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
