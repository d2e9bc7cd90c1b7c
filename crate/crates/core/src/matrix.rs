//! Positive reciprocal pairwise comparison matrices.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{MathError, Result};
use crate::scalar::Scalar;

/// Reciprocity tolerance applied to matrices loaded from outside (published
/// tables are printed to three decimals and are not exactly reciprocal).
pub const DEFAULT_RECIPROCITY_TOLERANCE: f64 = 0.01;

/// Square matrix of judgment ratios. `entries` is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct PairwiseMatrix<T> {
    labels: Vec<String>,
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> PairwiseMatrix<T> {
    /// Builds a matrix from explicit rows. Only the shape is checked here;
    /// call [`PairwiseMatrix::validate`] for the Saaty structure.
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<T>>) -> Result<Self> {
        check_labels(&labels)?;
        let n = labels.len();
        if rows.len() != n {
            return Err(MathError::ShapeMismatch {
                expected: n,
                actual: rows.len(),
            });
        }
        for row in &rows {
            if row.len() != n {
                return Err(MathError::ShapeMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
        }
        Ok(Self { labels, rows })
    }

    /// Builds a matrix from the strict upper triangle given row by row
    /// (`n(n-1)/2` values: (0,1), (0,2), ..., (1,2), ...). The diagonal is 1
    /// and every lower entry is the exact reciprocal of its mirror.
    pub fn from_upper_triangle(labels: Vec<String>, upper: &[T]) -> Result<Self> {
        check_labels(&labels)?;
        let n = labels.len();
        let expected = n * (n - 1) / 2;
        if upper.len() != expected {
            return Err(MathError::ShapeMismatch {
                expected,
                actual: upper.len(),
            });
        }
        let mut rows = vec![vec![T::one(); n]; n];
        let pairs = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        for ((i, j), &v) in pairs.zip(upper) {
            rows[i][j] = v;
            rows[j][i] = T::one() / v;
        }
        Ok(Self { labels, rows })
    }

    /// The perfectly consistent matrix `a_ij = w_i / w_j`.
    pub fn from_weights(labels: Vec<String>, weights: &[T]) -> Result<Self> {
        check_labels(&labels)?;
        let n = labels.len();
        if weights.len() != n {
            return Err(MathError::ShapeMismatch {
                expected: n,
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_positive_finite()) {
            return Err(MathError::InvalidWeights);
        }
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            T::one()
                        } else {
                            weights[i] / weights[j]
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { labels, rows })
    }

    /// Matrix of ones (every item equally important).
    pub fn uniform(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        Self::from_rows(labels, vec![vec![T::one(); n]; n])
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.rows[row][col]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = T> + '_ {
        self.rows.iter().map(move |r| r[col])
    }

    /// Strict upper triangle in row order, the inverse of
    /// [`PairwiseMatrix::from_upper_triangle`].
    pub fn upper_triangle(&self) -> Vec<T> {
        let n = self.order();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.rows[i][j]);
            }
        }
        out
    }

    /// Reorders items so that new item `k` is old item `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.order(), "permutation length");
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let rows = perm
            .iter()
            .map(|&pi| perm.iter().map(|&pj| self.rows[pi][pj]).collect())
            .collect();
        Self { labels, rows }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> PairwiseMatrix<U> {
        PairwiseMatrix {
            labels: self.labels.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&v| f(v)).collect())
                .collect(),
        }
    }

    /// Checks positivity, unit diagonal and reciprocity.
    ///
    /// The reciprocity deviation of a pair is the smaller of
    /// `|a_ji - 1/a_ij|` and `|a_ij - 1/a_ji|`, so a rounded table is judged
    /// by whichever of its two printed cells carries more precision.
    pub fn validate(&self, tolerance: T) -> ValidationResult {
        let n = self.order();
        let mut violations = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = self.rows[i][j];
                if !v.is_positive_finite() {
                    violations.push(Violation::NonPositive {
                        row: i,
                        col: j,
                        value: v.as_f64(),
                    });
                }
            }
        }
        for i in 0..n {
            let d = self.rows[i][i];
            if d != T::one() && d > T::zero() {
                violations.push(Violation::Diagonal {
                    index: i,
                    value: d.as_f64(),
                });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (self.rows[i][j], self.rows[j][i]);
                if !(a.is_positive_finite() && b.is_positive_finite()) {
                    continue;
                }
                let deviation = (b - a.recip()).abs().min((a - b.recip()).abs());
                if deviation > tolerance {
                    violations.push(Violation::Reciprocity {
                        row: i,
                        col: j,
                        upper: a.as_f64(),
                        lower: b.as_f64(),
                        deviation: deviation.as_f64(),
                    });
                }
            }
        }
        ValidationResult { violations }
    }
}

fn check_labels(labels: &[String]) -> Result<()> {
    if labels.len() < 2 {
        return Err(MathError::OrderTooSmall(labels.len()));
    }
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(MathError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

/// A structural defect in a pairwise matrix. Indices are zero-based;
/// `Display` renders them one-based, the way a person reads a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonPositive {
        row: usize,
        col: usize,
        value: f64,
    },
    Diagonal {
        index: usize,
        value: f64,
    },
    Reciprocity {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
        deviation: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositive { row, col, value } => {
                write!(
                    f,
                    "non-positive entry ({},{}) = {}",
                    row + 1,
                    col + 1,
                    value
                )
            }
            Violation::Diagonal { index, value } => {
                write!(
                    f,
                    "diagonal entry ({0},{0}) = {1}, expected 1",
                    index + 1,
                    value
                )
            }
            Violation::Reciprocity {
                row,
                col,
                upper,
                lower,
                deviation,
            } => write!(
                f,
                "reciprocity breach ({},{}) = {} vs ({},{}) = {} (deviation {:.4})",
                row + 1,
                col + 1,
                upper,
                col + 1,
                row + 1,
                lower,
                deviation
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}
