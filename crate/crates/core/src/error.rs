//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by clustering, rank construction, sampling and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("point coordinates must be finite")]
    NonFiniteCoordinate,

    #[error("{0} must not be empty")]
    EmptySet(&'static str),

    #[error("loss functions are defined for nonnegative arguments, got {0}")]
    NegativeLossInput(f64),

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("need at least {needed} Monte Carlo samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid centers: {0}")]
    InvalidCenters(String),

    #[error("invalid initial medoids: {0}")]
    InvalidInit(String),

    #[error("k = {k} exceeds the number of points n = {n}")]
    KExceedsN { k: usize, n: usize },

    #[error(
        "exhaustive search is limited to n <= {limit} (got n = {got}); \
         use the swap or multi-start solvers instead"
    )]
    InstanceTooLarge { limit: usize, got: usize },

    #[error("label sequences differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid support specification: {0}")]
    InvalidSupport(String),

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
