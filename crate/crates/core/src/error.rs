use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing sidecar {0}")]
    MissingSidecar(PathBuf),

    #[error("non-finite feature at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch: sidecar declares {rows}x{dims} = {expected} values, payload has {actual}")]
    ShapeMismatch {
        rows: usize,
        dims: usize,
        expected: usize,
        actual: usize,
    },

    #[error("unknown encoder tag {0:?}")]
    UnknownEncoder(String),

    #[error("unknown regime tag {0:?}")]
    UnknownRegime(String),

    #[error("malformed label line {line} in {path}: {reason}")]
    MalformedLabel { path: PathBuf, line: usize, reason: String },

    #[error("duplicate run record for {0}")]
    DuplicateRun(String),

    #[error("duplicate metric record for {0}")]
    DuplicateMetric(String),

    #[error("mAP out of range: {0}")]
    MapOutOfRange(f64),

    #[error("invalid config key: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("too few samples for {what}: need {need}, got {got}")]
    TooFewSamples {
        what: &'static str,
        need: usize,
        got: usize,
    },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("rank-deficient design: {0}")]
    Collinear(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
