use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("unknown level `{label}` for variable `{variable}`")]
    UnknownLevel { variable: String, label: String },

    #[error("level {level} out of range for `{variable}` (cardinality {cardinality})")]
    LevelOutOfRange {
        variable: String,
        level: usize,
        cardinality: usize,
    },

    #[error("record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },

    #[error("assignment is missing variables: {}", .0.join(", "))]
    MissingVariables(Vec<String>),

    #[error("query variable `{0}` is part of the evidence")]
    QueryInEvidence(String),

    #[error("evidence has zero probability under the model")]
    ZeroEvidence,

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("covariance for {condition} is not positive definite; use alpha > 0")]
    SingularCovariance { condition: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error("{}: {source}", .path.display())]
    File { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Diverged(_) | Error::NonFinite(_) | Error::ZeroEvidence
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

fn at(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File { path: path.to_path_buf(), source }
}

// fs wrappers whose errors name the file

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(at(path))
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(at(path))
}

pub(crate) fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(at(path))
}

pub(crate) fn create_dir_all(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(at(path))
}
