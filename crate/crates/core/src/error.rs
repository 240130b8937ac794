use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { path: PathBuf, offset: usize },

    #[error("{path}:{line}: sentence contains the reserved U+0000 character")]
    ReservedChar { path: PathBuf, line: usize },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("suffix index covers no characters")]
    EmptyIndex,

    #[error("word {0:?} is not in the vocabulary")]
    NotInVocabulary(String),

    #[error("segmentation graph has no path to position {0}")]
    Disconnected(usize),

    #[error("alignment error at sentence {line}: {message}")]
    Alignment { line: usize, message: String },

    #[error("no words survived sampling; the vocabulary is empty")]
    EmptyVocabulary,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("upstream service failure: {0}")]
    Upstream(String),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Upstream,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::Upstream(_) => ErrorClass::Upstream,
            _ => ErrorClass::Data,
        }
    }
}
