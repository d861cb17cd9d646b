use thiserror::Error;

use crate::Mode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for sample size {m}")]
    IndexOutOfRange { index: usize, m: usize },

    #[error("tuple {0:?} is not injective")]
    NonInjective(Vec<usize>),

    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("mode mismatch: expected {expected}, got {got}")]
    ModeMismatch { expected: Mode, got: Mode },

    #[error("tensor needs {cells} cells, over the budget of {budget}")]
    CellBudget { cells: u128, budget: u128 },

    #[error("arity {0} too large for permutation enumeration (max 8)")]
    ArityTooLarge(usize),

    #[error("header {header} outside [1, {h}]")]
    HeaderOutOfRange { header: usize, h: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("realizability certification failed: {0}")]
    NotRealizable(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
