//! Priority derivation and consistency checking.
//!
//! Priorities come from the column-normalize / row-average approximation,
//! and the principal eigenvalue is estimated as the mean of
//! `(A w)_i / w_i`. The eigenvector method is deliberately not used.

use serde::{Deserialize, Serialize};

use crate::error::{MathError, Result};
use crate::matrix::PairwiseMatrix;
use crate::scalar::Scalar;

/// Conventional acceptance threshold for the consistency ratio.
pub const CONSISTENCY_THRESHOLD: f64 = 0.1;

/// Saaty's random consistency index for orders 1 through 10.
const RANDOM_INDEX: [f64; 10] = [0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct PriorityVector<T> {
    pub labels: Vec<String>,
    pub weights: Vec<T>,
}

impl<T: Scalar> PriorityVector<T> {
    /// Normalizes `weights` to sum to one.
    pub fn normalized(labels: Vec<String>, weights: Vec<T>) -> Result<Self> {
        if labels.len() != weights.len() {
            return Err(MathError::ShapeMismatch {
                expected: labels.len(),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| *w < T::zero() || !w.is_finite()) {
            return Err(MathError::InvalidWeights);
        }
        let total: T = weights.iter().copied().sum();
        if !total.is_positive_finite() {
            return Err(MathError::InvalidWeights);
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { labels, weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight_of(&self, label: &str) -> Option<T> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.weights[i])
    }

    pub fn sum(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, T)> + '_ {
        self.labels
            .iter()
            .map(String::as_str)
            .zip(self.weights.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport<T> {
    pub lambda_max: T,
    pub ci: T,
    pub ri: T,
    pub cr: T,
    pub consistent: bool,
}

/// Column-stochastic version of a pairwise matrix, row-major.
pub fn normalize_columns<T: Scalar>(matrix: &PairwiseMatrix<T>) -> Vec<Vec<T>> {
    let n = matrix.order();
    let sums: Vec<T> = (0..n).map(|j| matrix.column(j).sum()).collect();
    matrix
        .rows()
        .iter()
        .map(|row| row.iter().zip(&sums).map(|(&a, &s)| a / s).collect())
        .collect()
}

/// Row averages of the column-normalized matrix.
pub fn priority_vector<T: Scalar>(matrix: &PairwiseMatrix<T>) -> PriorityVector<T> {
    let n = T::from_count(matrix.order());
    let weights = normalize_columns(matrix)
        .into_iter()
        .map(|row| row.into_iter().sum::<T>() / n)
        .collect();
    PriorityVector {
        labels: matrix.labels().to_vec(),
        weights,
    }
}

/// Estimates the principal eigenvalue as `(1/n) Σ (A w)_i / w_i`.
pub fn lambda_max<T: Scalar>(matrix: &PairwiseMatrix<T>, weights: &PriorityVector<T>) -> Result<T> {
    if weights.labels != matrix.labels() {
        return Err(MathError::LabelMismatch);
    }
    let n = matrix.order();
    let mut total = T::zero();
    for i in 0..n {
        let w_i = weights.weights[i];
        if !w_i.is_positive_finite() {
            return Err(MathError::ZeroWeight(weights.labels[i].clone()));
        }
        let aw: T = (0..n).map(|j| matrix.get(i, j) * weights.weights[j]).sum();
        total = total + aw / w_i;
    }
    Ok(total / T::from_count(n))
}

/// Saaty's random index for a matrix of order `n` (1..=10).
pub fn random_index<T: Scalar>(n: usize) -> Result<T> {
    if n == 0 || n > RANDOM_INDEX.len() {
        return Err(MathError::UnsupportedOrder(n));
    }
    Ok(T::lit(RANDOM_INDEX[n - 1]))
}

/// Priorities plus consistency figures, judged against the conventional 0.1.
pub fn consistency<T: Scalar>(
    matrix: &PairwiseMatrix<T>,
) -> Result<(PriorityVector<T>, ConsistencyReport<T>)> {
    consistency_with_threshold(matrix, T::lit(CONSISTENCY_THRESHOLD))
}

pub fn consistency_with_threshold<T: Scalar>(
    matrix: &PairwiseMatrix<T>,
    threshold: T,
) -> Result<(PriorityVector<T>, ConsistencyReport<T>)> {
    let n = matrix.order();
    let ri = random_index::<T>(n)?;
    let weights = priority_vector(matrix);
    let lambda = lambda_max(matrix, &weights)?;
    // CI's denominator and RI both degenerate for n <= 2, which is always consistent.
    let (ci, cr) = if n <= 2 {
        (T::zero(), T::zero())
    } else {
        let ci = (lambda - T::from_count(n)) / T::from_count(n - 1);
        (ci, ci / ri)
    };
    let report = ConsistencyReport {
        lambda_max: lambda,
        ci,
        ri,
        cr,
        consistent: cr < threshold,
    };
    Ok((weights, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn expert_matrix() -> PairwiseMatrix<f64> {
        PairwiseMatrix::from_upper_triangle(labels(3), &[2.0, 3.0, 2.0]).unwrap()
    }

    #[test]
    fn all_ones_normalizes_to_thirds() {
        let m = PairwiseMatrix::<f64>::uniform(labels(3)).unwrap();
        for row in normalize_columns(&m) {
            for v in row {
                assert!((v - 1.0 / 3.0).abs() < 1e-12);
            }
        }
        let w = priority_vector(&m);
        assert!(w.weights.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn expert_matrix_first_column_is_six_three_two_elevenths() {
        let norm = normalize_columns(&expert_matrix());
        let expected = [6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0];
        for (i, e) in expected.iter().enumerate() {
            assert!((norm[i][0] - e).abs() < 1e-12);
        }
        for j in 0..3 {
            let s: f64 = norm.iter().map(|r| r[j]).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn expert_matrix_priorities_and_consistency() {
        // Hand computation: columns sum to 11/6, 7/2, 6.
        let (w, r) = consistency(&expert_matrix()).unwrap();
        let expected = [0.5390, 0.2973, 0.1638];
        for (got, e) in w.weights.iter().zip(expected) {
            assert!((got - e).abs() < 2e-3, "{got} vs {e}");
        }
        assert!((r.lambda_max - 3.009).abs() < 1e-3);
        assert!((r.ci - 0.0046).abs() < 1e-4);
        assert!((r.cr - 0.008).abs() < 5e-4);
        assert_eq!(r.ri, 0.58);
        assert!(r.consistent);
    }

    #[test]
    fn two_by_two_is_consistent_by_convention() {
        let m = PairwiseMatrix::<f64>::from_upper_triangle(labels(2), &[2.0]).unwrap();
        let (w, r) = consistency(&m).unwrap();
        assert!((r.lambda_max - 2.0).abs() < 1e-12);
        assert_eq!((r.ci, r.cr), (0.0, 0.0));
        assert!((w.weights[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_index_table() {
        assert_eq!(random_index::<f64>(2).unwrap(), 0.0);
        assert_eq!(random_index::<f64>(3).unwrap(), 0.58);
        assert_eq!(random_index::<f64>(7).unwrap(), 1.32);
        assert_eq!(random_index::<f64>(10).unwrap(), 1.49);
        assert_eq!(
            random_index::<f64>(11),
            Err(MathError::UnsupportedOrder(11))
        );
        assert_eq!(random_index::<f64>(0), Err(MathError::UnsupportedOrder(0)));
    }

    #[test]
    fn consistency_rejects_orders_past_the_table() {
        let m = PairwiseMatrix::<f64>::uniform(labels(11)).unwrap();
        assert_eq!(
            consistency(&m).unwrap_err(),
            MathError::UnsupportedOrder(11)
        );
    }

    #[test]
    fn lambda_max_guards_weights() {
        let m = expert_matrix();
        let zero = PriorityVector {
            labels: labels(3),
            weights: vec![0.5, 0.5, 0.0],
        };
        assert_eq!(
            lambda_max(&m, &zero),
            Err(MathError::ZeroWeight("c2".into()))
        );
        let other = PriorityVector {
            labels: labels(2),
            weights: vec![0.5, 0.5],
        };
        assert_eq!(lambda_max(&m, &other), Err(MathError::LabelMismatch));
    }

    #[test]
    fn consistent_matrix_recovers_its_weights() {
        let w = [4.0, 2.0, 1.0, 0.5];
        let m = PairwiseMatrix::from_weights(labels(4), &w).unwrap();
        let (p, r) = consistency(&m).unwrap();
        let total: f64 = w.iter().sum();
        for (got, raw) in p.weights.iter().zip(w) {
            assert!((got - raw / total).abs() < 1e-12);
        }
        assert!(r.ci.abs() < 1e-12);
    }

    #[test]
    fn normalized_vector_helpers() {
        let v = PriorityVector::normalized(labels(2), vec![1.0, 3.0]).unwrap();
        assert_eq!(v.weight_of("c1"), Some(0.75));
        assert_eq!(v.weight_of("zz"), None);
        assert!(PriorityVector::normalized(labels(2), vec![0.0, 0.0]).is_err());
        assert!(PriorityVector::normalized(labels(2), vec![1.0]).is_err());
    }
}
