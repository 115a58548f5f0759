use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("no documents")]
    NoDocuments,

    #[error("unknown label {value:?} for task {task}")]
    UnknownLabel { task: String, value: String },

    #[error("unknown task {0:?}")]
    UnknownTask(String),

    #[error("duplicate document id {0:?}")]
    DuplicateId(String),

    #[error("invalid document: {0}")]
    InvalidDocument(String),

    #[error("split dates overlap: test document {test_id} ({test_date}) is not later than {other_id} ({other_date})")]
    SplitDates {
        test_id: String,
        test_date: String,
        other_id: String,
        other_date: String,
    },

    #[error("corpus has no trainable tokens")]
    EmptyTrainingCorpus,

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("undefined similarity: zero vector")]
    ZeroVector,

    #[error("word not in vocabulary: {0:?}")]
    OutOfVocabulary(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch in {what}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        what: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    #[error("vocabulary hash mismatch: expected {expected}, found {found}")]
    VocabularyHash { expected: String, found: String },

    #[error("no valid concept rows in {0}")]
    NoConcepts(PathBuf),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("word {0} has no graph edges and zero alpha; retrofit update undefined")]
    UndefinedUpdate(usize),

    #[error("label index {label} out of range for task {task} with {classes} classes")]
    LabelOutOfRange {
        task: String,
        label: usize,
        classes: usize,
    },

    #[error("document length {found} does not match model length {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("misaligned predictions: {0}")]
    Misaligned(String),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
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
