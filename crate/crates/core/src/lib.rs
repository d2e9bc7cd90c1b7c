//! Analytic hierarchy process mathematics.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix it to `f64`, which is what the rest of the
//! workspace uses.

pub mod aggregate;
pub mod csv_format;
pub mod elicitation;
pub mod error;
pub mod hierarchy;
pub mod matrix;
pub mod priority;
pub mod scalar;

pub use aggregate::{aggregate, Aggregation};
pub use error::MathError;
pub use hierarchy::{
    export_tree, global_leaf_priorities, score_alternatives, validate_tree, ExpectedShape,
    ExportFormat, HierarchyError,
};
pub use matrix::{ValidationResult, Violation, DEFAULT_RECIPROCITY_TOLERANCE};
pub use priority::{
    consistency, consistency_with_threshold, lambda_max, normalize_columns, priority_vector,
    random_index, CONSISTENCY_THRESHOLD,
};
pub use scalar::Scalar;

pub type PairwiseMatrix = matrix::PairwiseMatrix<f64>;
pub type PriorityVector = priority::PriorityVector<f64>;
pub type ConsistencyReport = priority::ConsistencyReport<f64>;
pub type HierarchyTree = hierarchy::HierarchyTree<f64>;
pub type AlternativeScores = hierarchy::AlternativeScores<f64>;
