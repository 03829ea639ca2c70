//! Crate-wide error type.

use thiserror::Error;

/// Unified error type for all library operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric: |a12 - a21| = {skew:.3e} exceeds tolerance {tol:.3e}")]
    NotSymmetric { skew: f64, tol: f64 },

    #[error("singular matrix: |det| = {det:.3e} at or below tolerance {tol:.3e}")]
    Singular { det: f64, tol: f64 },

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("orientation-reversing well: det U = {0:.6} <= 0")]
    OrientationReversingWell(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate well set: {0}")]
    DegenerateWellSet(String),

    #[error("empty boundary patch")]
    EmptyPatch,

    #[error("coordinate out of patch range: {0}")]
    OutOfRange(String),

    #[error("patch radius {r:.6} exceeds invertibility radius r0 = {r0:.6}")]
    RadiusExceedsInvertible { r: f64, r0: f64 },

    #[error("degenerate polygon edge at vertex {0}")]
    DegenerateEdge(usize),

    #[error("invalid polygon: {0}")]
    BadPolygon(String),

    #[error("not an admissible field: {0}")]
    NotAdmissible(String),

    #[error("incompatible orientation: {0}")]
    IncompatibleOrientation(String),

    #[error("construction solve failed: {0}")]
    ConstructionFailed(String),

    #[error("rank-deficient least-squares system at column {0}")]
    RankDeficient(usize),

    #[error("domain is not star-shaped about the origin: {0}")]
    NotStarShaped(String),

    #[error("grid/mask inconsistency: {0}")]
    GridMismatch(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
