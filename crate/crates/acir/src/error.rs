use std::io;
use std::path::PathBuf;

use acir_core::index::IndexError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a git repository: {0}")]
    NotARepository(PathBuf),
    #[error("unknown revision `{0}`")]
    UnknownRevision(String),
    #[error("`{path}` does not exist at {revision}")]
    FileAbsentAtRevision { path: String, revision: String },
    #[error("invalid line range {start}..{end} (file has {line_count} lines)")]
    InvalidRange { start: u32, end: u32, line_count: u32 },
    #[error("git failed: {0}")]
    RepositoryRead(String),
    #[error("threshold {threshold} is not an ancestor of revision {revision}")]
    ThresholdNotAncestor { threshold: String, revision: String },
    #[error("invalid file filter: {0}")]
    FileFilter(String),
    #[error("corpus has no documents")]
    EmptyCorpus,
    #[error("index format version {found} is newer than supported version {supported}")]
    FormatVersionMismatch { found: u64, supported: u64 },
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error("no evaluation cases given")]
    EmptyCaseSet,
    #[error("invalid case file: {0}")]
    InvalidCases(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }
}

impl From<IndexError> for Error {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::EmptyCorpus => Error::EmptyCorpus,
            IndexError::Corrupt(m) => Error::CorruptIndex(m),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
