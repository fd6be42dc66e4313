use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{path}: line {line}: expected {expected} fields, found {found}")]
    Schema {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{0}: no data rows")]
    Empty(PathBuf),
    #[error("column {index} ({name}) is constant; min-max scaling is undefined")]
    ConstantColumn { index: usize, name: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular or nearly singular (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("training aborted: {0}")]
    Training(String),
    #[error("input outside all membership supports")]
    NoFiring,
    #[error("empty {0}")]
    EmptyInput(&'static str),
    #[error("config error at `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }
}
