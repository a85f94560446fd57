use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Io,
    Data,
    Degenerate,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("embedding file is empty")]
    EmptyEmbeddings,

    #[error("prompt is empty after tokenization")]
    EmptyPrompt,

    #[error("prompt is empty after out-of-vocabulary filtering")]
    EmptyAfterOov,

    #[error("out-of-vocabulary tokens: {}", .0.join(", "))]
    OutOfVocabulary(Vec<String>),

    #[error("degenerate prompt: aggregate embedding has zero norm")]
    DegeneratePrompt,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("need at least two distinct knots, found {0}")]
    TooFewKnots(usize),

    #[error("too few training rows: have {rows}, need at least {required}")]
    TooFewRows { rows: usize, required: usize },

    #[error("penalized system is not positive definite")]
    RankDeficient,

    #[error("training corpus is empty")]
    EmptyCorpus,

    #[error("no prompt in the corpus could be analyzed")]
    NoUsablePrompts,

    #[error("model file {path}: {message}")]
    ModelFormat { path: String, message: String },

    #[error("relevance maps were built against different embedding tables")]
    TableMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{label}: {source}")]
    Labeled {
        label: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn labeled(self, label: &'static str) -> Self {
        Error::Labeled { label, source: Box::new(self) }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::EmptyPrompt | Error::EmptyAfterOov | Error::DegeneratePrompt => ErrorKind::Degenerate,
            Error::InvalidArgument(_) => ErrorKind::Usage,
            Error::Labeled { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}
