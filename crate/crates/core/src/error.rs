use thiserror::Error;

use crate::sobolev::{MultiIndex, Regularity};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("multiindex {sub} is not componentwise below {from}")]
    NotBelow { sub: MultiIndex, from: MultiIndex },

    #[error("multiindex {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: MultiIndex,
        expected: usize,
        got: usize,
    },

    #[error("safe grade undefined: |i| = {order} and s = {s}, k = {k} (need |i| <= s <= k)")]
    SafeGradeDomain { order: u32, s: u32, k: Regularity },

    #[error("ungraded product: H^{left} * H^{right} has no product grade in dimension {n}")]
    UngradedProduct {
        left: Regularity,
        right: Regularity,
        n: usize,
    },

    #[error("derivative of order {order} would drop grade {grade} below zero")]
    NegativeGrade { grade: Regularity, order: u32 },

    #[error("frequency {freq:?} does not fit on a grid with {modes} modes per dimension")]
    GridTooSmall { freq: Vec<i64>, modes: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("coefficient is not positive: {0}")]
    NotPositive(String),

    #[error("not elliptic: {0}")]
    NotElliptic(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("dense guard exceeded: {modes} total modes > {limit}")]
    GuardExceeded { modes: usize, limit: usize },

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("partition of unity: {0}")]
    Partition(String),

    #[error("spec error: {0}")]
    Spec(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
