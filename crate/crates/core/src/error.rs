use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {what} = {index}, limit {limit}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("schedule endpoint t = ta = {ta} has zero transverse field")]
    ScheduleEndpoint { ta: u32 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("enumeration of {spins} spins exceeds the cap of {cap}")]
    EnumerationTooLarge { spins: usize, cap: usize },

    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),

    #[error("corrupt result file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    #[error("parse error in {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
