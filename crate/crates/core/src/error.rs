use thiserror::Error;

use crate::matrix::Violation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MathError {
    #[error("matrix order must be at least 2, got {0}")]
    OrderTooSmall(usize),
    #[error("expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("matrices disagree on order or labels (matrix {index})")]
    DimensionMismatch { index: usize },
    #[error("no matrices to aggregate")]
    EmptyInput,
    #[error("matrix {index} failed validation: {}", summarize(.violations))]
    InvalidMatrix {
        index: usize,
        violations: Vec<Violation>,
    },
    #[error("random index is tabulated for orders 1..=10, got {0}")]
    UnsupportedOrder(usize),
    #[error("priority weight for {0:?} is not positive")]
    ZeroWeight(String),
    #[error("weights are labelled differently from the matrix")]
    LabelMismatch,
    #[error("weights must be positive and finite")]
    InvalidWeights,
    #[error("malformed matrix file: {0}")]
    Parse(String),
}

fn summarize(violations: &[Violation]) -> String {
    let mut parts: Vec<String> = violations.iter().take(3).map(|v| v.to_string()).collect();
    if violations.len() > 3 {
        parts.push(format!("and {} more", violations.len() - 3));
    }
    parts.join("; ")
}

pub type Result<T> = std::result::Result<T, MathError>;
