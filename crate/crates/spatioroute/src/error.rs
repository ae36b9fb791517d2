use std::path::PathBuf;

use thiserror::Error;

use crate::backend::BackendError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("question is empty or whitespace-only")]
    EmptyQuestion,

    #[error("unknown template id: {0}")]
    UnknownTemplate(String),

    #[error("template {template_id} is corrupt: expected exactly one `{placeholder}` placeholder, found {found}")]
    PlaceholderCount {
        template_id: String,
        placeholder: &'static str,
        found: usize,
    },

    #[error("template {0} requires a situation but none was provided")]
    MissingSituation(String),

    #[error("invalid demo set: {0}")]
    DemoSet(String),

    #[error("backend error: {0}")]
    Backend(#[from] BackendError),

    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate instance id {id} ({path}:{line})")]
    DuplicateId {
        id: String,
        path: PathBuf,
        line: usize,
    },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("no question ids joined across the questions and annotations files")]
    EmptyJoin,

    #[error("scene {0} missing from the frames manifest")]
    UnknownScene(String),

    #[error("unknown instance id in records: {0}")]
    UnknownInstance(String),

    #[error("reports cover different datasets: {0}")]
    DatasetMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
