use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max |A_ij - A_ji| = {max_asymmetry:e})")]
    NonSymmetric { max_asymmetry: f64 },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid matrix shape {rows}x{cols} with {len} values")]
    InvalidShape {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("column {column} is identically zero")]
    ZeroColumn { column: usize },

    #[error("row for user {user} sums to zero")]
    ZeroRow { user: String },

    #[error("{block} item block has no nonzero entries")]
    EmptyBlock { block: &'static str },

    #[error("basis is not orthonormal (max |U^T U - I| = {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("filters removed every {what}")]
    EmptyResult { what: &'static str },

    #[error("bisection on the error-constraint multiplier stalled after {iterations} iterations (violation {violation:e})")]
    BisectionStall { iterations: usize, violation: f64 },

    #[error("user pool of size {pool} cannot supply {needed} distinct users per item")]
    PoolTooSmall { pool: usize, needed: usize },

    #[error("enumeration over d = {d} items exceeds the limit of {limit}")]
    TooLarge { d: usize, limit: usize },

    #[error(
        "matrix is not block-exclusive: X^T X has a nonzero cross-block entry at ({row}, {col})"
    )]
    NotBlockExclusive { row: usize, col: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("no item has both positive and negative labels")]
    NoScorableItems,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
