use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the embedding pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported distribution family: {0}")]
    UnsupportedFamily(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("distribution family mismatch: {left} vs {right}")]
    FamilyMismatch {
        left: &'static str,
        right: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("flow is not invertible: {0}")]
    NotInvertible(String),

    #[error("wrong flow kind: expected {expected}, got {got}")]
    WrongFlowKind {
        expected: &'static str,
        got: &'static str,
    },

    #[error("{path}:{line}: parse error: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dataset already has reciprocal relations")]
    AlreadyAugmented,

    #[error("index {index} out of range for {what} (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("checkpoint format mismatch: {0}")]
    FormatVersionMismatch(String),

    #[error("checkpoint checksum does not match its contents")]
    CorruptChecksum,

    #[error("evaluation split is empty")]
    EmptySplit,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
