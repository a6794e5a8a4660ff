use crate::silo::ColumnRef;
use thiserror::Error;

/// Errors produced by the matching pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("manifest {path}:{line}: {msg}")]
    Manifest {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("intra-silo match references a missing column: {left} <-> {right}")]
    MissingMatchColumn { left: ColumnRef, right: ColumnRef },

    #[error("intra-silo match pairs a column with itself: {col}")]
    SelfMatch { col: ColumnRef },

    #[error("dimension mismatch: {context} expected {expected}, got {actual}")]
    DimMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("cannot fit standardizer: no profiles")]
    NoProfiles,

    #[error("silo {0} has no columns")]
    EmptySilo(String),

    #[error("no negative evidence: every relatedness graph is a single component")]
    NoNegativeEvidence,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model file {path} is corrupt at byte offset {offset}: {msg}")]
    ModelFormat {
        path: String,
        offset: u64,
        msg: String,
    },

    #[error("model file {path} has version {found}, expected {expected}")]
    ModelVersion {
        path: String,
        found: u32,
        expected: u32,
    },

    #[error("prediction ({left}, {right}) is outside the evaluation universe")]
    PredictionOutsideUniverse { left: ColumnRef, right: ColumnRef },

    #[error("ground-truth pair ({left}, {right}) is outside the evaluation universe")]
    TruthOutsideUniverse { left: ColumnRef, right: ColumnRef },

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
