//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide error enum. Variants are named after the contract they enforce.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive parameter: {0}")]
    NonPositiveParameter(String),

    #[error("network state became non-finite at step {step}")]
    NonFiniteState { step: usize },

    #[error("protocol out of range: {0}")]
    ProtocolOutOfRange(String),

    #[error("no wave detected: {0}")]
    NoWaveDetected(String),

    #[error("operation requires the {expected} variant, recording is {actual}")]
    WrongVariant {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no event detected: {0}")]
    NoEventDetected(String),

    #[error("bad kernel: {0}")]
    BadKernel(String),

    #[error("unstable step: {0}; reduce dt")]
    UnstableStep(String),

    #[error("bad head count: embedding dim {dim} not divisible by {heads} heads")]
    BadHeadCount { dim: usize, heads: usize },

    #[error("task alphabet is empty")]
    EmptyAlphabet,

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("parse error at line {line}, field {field}: {msg}")]
    ParseError {
        line: usize,
        field: String,
        msg: String,
    },

    #[error("io error: {0}")]
    IoError(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
