//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layer mismatch: {0}")]
    LayerMismatch(String),
    #[error("window overflow: {0}")]
    WindowOverflow(String),
    #[error("ambient dimension mismatch: expected {expected}, got {got}")]
    AmbientMismatch { expected: usize, got: usize },
    #[error("vector is not in the subspace")]
    NotInSubspace,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("matrix is not a projection: {0}")]
    NotAProjection(String),
    #[error("induced differential is not well defined: {0}")]
    NotWellDefined(String),
    #[error("dimensions did not stabilize within budget {0}")]
    NotStabilized(usize),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("commutator is unbounded: {0}")]
    Unbounded(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
