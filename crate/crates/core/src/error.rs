use thiserror::Error;

/// Errors produced by the kostlan-core operations.
///
/// Argument errors (`DimensionMismatch`, `DegreeMismatch`, `VariableIndex`,
/// `NotOrthogonal`, `NotUnit`, `InvalidArgument`, `ZeroPolynomial`) indicate
/// misuse of an operation. `Unresolved` signals that a topological result
/// failed its resolution certificate and the caller may refine. `Internal`
/// signals a numerical failure that is not expected at desk scale.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} variables, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },

    #[error("variable index {index} out of range for {n_vars} variables")]
    VariableIndex { index: usize, n_vars: usize },

    #[error("matrix is not orthogonal (deviation {deviation:.3e})")]
    NotOrthogonal { deviation: f64 },

    #[error("point is not on the unit sphere (|norm - 1| = {deviation:.3e})")]
    NotUnit { deviation: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("polynomial is numerically zero")]
    ZeroPolynomial,

    #[error("unresolved: {0}")]
    Unresolved(String),

    #[error("internal numerical failure: {0}")]
    Internal(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization failure: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
