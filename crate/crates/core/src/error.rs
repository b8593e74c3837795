use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },

    #[error("invalid profile layout: {0}")]
    InvalidLayout(String),

    #[error("no entries to build from")]
    EmptyInput,

    #[error("duplicate entry id {0}")]
    DuplicateId(u64),

    #[error("score {0} outside the open interval (0, 1)")]
    ScoreOutOfRange(f64),

    #[error("label must be literal 0 or 1, got {0}")]
    LabelInvalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic bytes, not a knowledge-base file")]
    BadMagic,

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },

    #[error("file truncated: need {expected} bytes, found {actual}")]
    TruncatedFile { expected: u64, actual: u64 },

    #[error("corrupt knowledge-base file: {0}")]
    CorruptFile(String),

    #[error("knowledge base is empty")]
    EmptyBase,

    #[error("k must be at least 1")]
    InvalidK,

    #[error("hybrid retrieval needs k >= 2, got {0}")]
    HybridKTooSmall(usize),

    #[error("parallelism must be at least 1")]
    InvalidParallelism,

    #[error("query {id}: {source}")]
    Query {
        id: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("neighbor set is empty")]
    EmptyNeighborSet,

    #[error("neighbor index {index} out of range for base of {len} rows")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no samples to score")]
    EmptySamples,

    #[error("EER undefined: no {0} samples")]
    MissingClass(&'static str),

    #[error("query {0} has no ground-truth label")]
    UnlabeledQuery(u64),

    #[error("unknown profile attribute '{0}'")]
    UnknownAttribute(String),

    #[error("mask excludes every profile attribute")]
    AllAttributesExcluded,

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn at_line(line: usize, err: Error) -> Error {
        Error::AtLine { line, source: Box::new(err) }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io { path: path.into(), source }
    }

    /// Innermost error, looking through line and query wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLine { source, .. } | Error::Query { source, .. } => source.root(),
            other => other,
        }
    }
}
