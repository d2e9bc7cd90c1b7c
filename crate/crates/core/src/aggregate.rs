//! Group aggregation of individual judgment matrices.

use serde::{Deserialize, Serialize};

use crate::error::{MathError, Result};
use crate::matrix::{PairwiseMatrix, DEFAULT_RECIPROCITY_TOLERANCE};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Element-wise geometric mean; preserves reciprocity.
    #[default]
    Geometric,
    /// Element-wise arithmetic mean.
    Arithmetic,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "geometric" => Ok(Self::Geometric),
            "arithmetic" => Ok(Self::Arithmetic),
            other => Err(format!("unknown aggregation method {other:?}")),
        }
    }
}

/// Combines the matrices of several judges into one.
///
/// All inputs must share order and label ordering and pass validation at
/// [`DEFAULT_RECIPROCITY_TOLERANCE`]. The output diagonal is exactly 1.
pub fn aggregate<T: Scalar>(
    matrices: &[PairwiseMatrix<T>],
    method: Aggregation,
) -> Result<PairwiseMatrix<T>> {
    let first = matrices.first().ok_or(MathError::EmptyInput)?;
    let tolerance = T::lit(DEFAULT_RECIPROCITY_TOLERANCE);
    for (index, m) in matrices.iter().enumerate() {
        if m.labels() != first.labels() {
            return Err(MathError::DimensionMismatch { index });
        }
        let report = m.validate(tolerance);
        if !report.is_ok() {
            return Err(MathError::InvalidMatrix {
                index,
                violations: report.violations,
            });
        }
    }

    let n = first.order();
    let count = T::from_count(matrices.len());
    let mut rows = vec![vec![T::one(); n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i == j {
                continue;
            }
            *cell = match method {
                // exp of the mean log: ln(1/x) = -ln(x) keeps mirrored cells reciprocal.
                Aggregation::Geometric => {
                    let log_sum: T = matrices.iter().map(|m| m.get(i, j).ln()).sum();
                    (log_sum / count).exp()
                }
                Aggregation::Arithmetic => {
                    let sum: T = matrices.iter().map(|m| m.get(i, j)).sum();
                    sum / count
                }
            };
        }
    }
    PairwiseMatrix::from_rows(first.labels().to_vec(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: f64) -> PairwiseMatrix<f64> {
        PairwiseMatrix::from_upper_triangle(vec!["x".into(), "y".into()], &[a]).unwrap()
    }

    #[test]
    fn geometric_and_arithmetic_means_of_two_judges() {
        let ms = [pair(2.0), pair(8.0)];
        let g = aggregate(&ms, Aggregation::Geometric).unwrap();
        let a = aggregate(&ms, Aggregation::Arithmetic).unwrap();
        assert!((g.get(0, 1) - 4.0).abs() < 1e-12);
        assert!((g.get(1, 0) - 0.25).abs() < 1e-12);
        assert!((a.get(0, 1) - 5.0).abs() < 1e-12);
        assert_eq!(g.get(0, 0), 1.0);
    }

    #[test]
    fn opposite_judgments_cancel() {
        let g = aggregate(&[pair(3.0), pair(1.0 / 3.0)], Aggregation::Geometric).unwrap();
        assert!((g.get(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_inputs_are_a_fixed_point() {
        let m = PairwiseMatrix::<f64>::from_upper_triangle(
            vec!["a".into(), "b".into(), "c".into()],
            &[2.0, 3.0, 2.0],
        )
        .unwrap();
        let copies = vec![m.clone(); 7];
        for method in [Aggregation::Geometric, Aggregation::Arithmetic] {
            let out = aggregate(&copies, method).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((out.get(i, j) - m.get(i, j)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_empty_mismatched_and_invalid_inputs() {
        assert_eq!(
            aggregate::<f64>(&[], Aggregation::Geometric),
            Err(MathError::EmptyInput)
        );
        let other =
            PairwiseMatrix::from_upper_triangle(vec!["x".into(), "z".into()], &[2.0]).unwrap();
        assert_eq!(
            aggregate(&[pair(2.0), other], Aggregation::Geometric),
            Err(MathError::DimensionMismatch { index: 1 })
        );
        let bad = PairwiseMatrix::from_rows(
            vec!["x".into(), "y".into()],
            vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        )
        .unwrap();
        assert!(matches!(
            aggregate(&[pair(2.0), bad], Aggregation::Geometric),
            Err(MathError::InvalidMatrix { index: 1, .. })
        ));
    }

    #[test]
    fn method_names_parse() {
        assert_eq!(
            "Geometric".parse::<Aggregation>(),
            Ok(Aggregation::Geometric)
        );
        assert!("median".parse::<Aggregation>().is_err());
    }
}
