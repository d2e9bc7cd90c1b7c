//! Goal / criteria / sub-criteria / alternatives tree and the final synthesis.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::priority::PriorityVector;
use crate::scalar::Scalar;

/// Deepest criteria level supported (top criteria plus one sub level).
pub const MAX_LEVEL: u8 = 2;

const SIBLING_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct CriterionNode<T> {
    pub label: String,
    pub level: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_priority: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_priority: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct AlternativeNode<T> {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct HierarchyTree<T = f64> {
    pub goal: String,
    #[serde(default)]
    pub criteria: Vec<CriterionNode<T>>,
    #[serde(default)]
    pub alternatives: Vec<AlternativeNode<T>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HierarchyError {
    #[error("criterion {0:?} has no local priority")]
    MissingLocalPriority(String),
    #[error("tree is malformed: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<TreeViolation>),
    #[error("leaf sets differ (missing {missing:?}, unexpected {unexpected:?})")]
    LeafSetMismatch {
        missing: Vec<String>,
        unexpected: Vec<String>,
    },
    #[error("alternatives under leaf {0:?} differ from the first leaf's")]
    AlternativeMismatch(String),
    #[error("no leaf criteria to synthesize over")]
    Empty,
}

impl<T: Scalar> HierarchyTree<T> {
    pub fn new(goal: impl Into<String>) -> Self {
        Self {
            goal: goal.into(),
            criteria: Vec::new(),
            alternatives: Vec::new(),
        }
    }

    pub fn add_criterion(&mut self, label: impl Into<String>, local: Option<T>) -> &mut Self {
        self.criteria.push(CriterionNode {
            label: label.into(),
            level: 1,
            parent: None,
            local_priority: local,
            global_priority: None,
        });
        self
    }

    pub fn add_subcriterion(
        &mut self,
        parent: impl Into<String>,
        label: impl Into<String>,
        local: Option<T>,
    ) -> &mut Self {
        self.criteria.push(CriterionNode {
            label: label.into(),
            level: 2,
            parent: Some(parent.into()),
            local_priority: local,
            global_priority: None,
        });
        self
    }

    pub fn add_alternative(&mut self, label: impl Into<String>) -> &mut Self {
        self.alternatives.push(AlternativeNode {
            label: label.into(),
            score: None,
        });
        self
    }

    pub fn top_level(&self) -> impl Iterator<Item = &CriterionNode<T>> + '_ {
        self.criteria.iter().filter(|c| c.level == 1)
    }

    pub fn children<'a>(
        &'a self,
        parent: &'a str,
    ) -> impl Iterator<Item = &'a CriterionNode<T>> + 'a {
        self.criteria
            .iter()
            .filter(move |c| c.level == 2 && c.parent.as_deref() == Some(parent))
    }

    /// Lowest-level criteria: every sub-criterion, plus top criteria that
    /// have no children. Order follows the top-level order.
    pub fn leaves(&self) -> Vec<&CriterionNode<T>> {
        let mut out = Vec::new();
        for top in self.top_level() {
            let kids: Vec<_> = self.children(&top.label).collect();
            if kids.is_empty() {
                out.push(top);
            } else {
                out.extend(kids);
            }
        }
        out
    }

    /// Stable identifier of a leaf: `Parent > Child`, or the label alone
    /// for a childless top criterion.
    pub fn leaf_key(node: &CriterionNode<T>) -> String {
        match &node.parent {
            Some(p) => format!("{p} > {}", node.label),
            None => node.label.clone(),
        }
    }

    /// `(leaf key, global priority)` for every leaf that has one.
    pub fn leaf_globals(&self) -> Vec<(String, T)> {
        self.leaves()
            .into_iter()
            .filter_map(|n| n.global_priority.map(|g| (Self::leaf_key(n), g)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedShape {
    pub top_count: usize,
    pub sub_per_top: usize,
    pub alt_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeViolation {
    EmptyLabel {
        level: u8,
    },
    OrphanNode {
        label: String,
        parent: Option<String>,
    },
    TopLevelWithParent {
        label: String,
    },
    TooDeep {
        label: String,
        level: u8,
    },
    DuplicateLabel {
        group: String,
        label: String,
    },
    ShapeMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },
    SiblingPrioritySum {
        group: String,
        sum: f64,
    },
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyLabel { level } => write!(f, "empty label at level {level}"),
            Self::OrphanNode { label, parent } => match parent {
                Some(p) => write!(
                    f,
                    "orphan node {label:?}: parent {p:?} is not a top-level criterion"
                ),
                None => write!(f, "orphan node {label:?}: no parent"),
            },
            Self::TopLevelWithParent { label } => {
                write!(f, "top-level criterion {label:?} must not have a parent")
            }
            Self::TooDeep { label, level } => {
                write!(f, "criterion {label:?} at level {level}; at most {MAX_LEVEL} levels are supported")
            }
            Self::DuplicateLabel { group, label } => {
                write!(f, "duplicate label {label:?} under {group}")
            }
            Self::ShapeMismatch {
                what,
                expected,
                actual,
            } => {
                write!(
                    f,
                    "shape mismatch: expected {expected} {what}, found {actual}"
                )
            }
            Self::SiblingPrioritySum { group, sum } => {
                write!(f, "local priorities under {group} sum to {sum}, expected 1")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TreeValidation {
    pub violations: Vec<TreeViolation>,
}

impl TreeValidation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_tree<T: Scalar>(
    tree: &HierarchyTree<T>,
    expected: Option<ExpectedShape>,
) -> TreeValidation {
    let mut violations = Vec::new();
    let tops: HashSet<&str> = tree.top_level().map(|c| c.label.as_str()).collect();

    for node in &tree.criteria {
        if node.label.trim().is_empty() {
            violations.push(TreeViolation::EmptyLabel { level: node.level });
        }
        match node.level {
            1 => {
                if node.parent.is_some() {
                    violations.push(TreeViolation::TopLevelWithParent {
                        label: node.label.clone(),
                    });
                }
            }
            2 => match &node.parent {
                Some(p) if tops.contains(p.as_str()) => {}
                parent => violations.push(TreeViolation::OrphanNode {
                    label: node.label.clone(),
                    parent: parent.clone(),
                }),
            },
            level => violations.push(TreeViolation::TooDeep {
                label: node.label.clone(),
                level,
            }),
        }
    }

    // Sibling groups: top level, then each parent's children.
    let mut groups: BTreeMap<String, Vec<&CriterionNode<T>>> = BTreeMap::new();
    for node in &tree.criteria {
        let group = match (node.level, &node.parent) {
            (1, _) => "the goal".to_string(),
            (_, Some(p)) => format!("{p:?}"),
            _ => continue,
        };
        groups.entry(group).or_default().push(node);
    }
    for (group, members) in &groups {
        let mut seen = HashSet::new();
        for m in members {
            if !seen.insert(m.label.as_str()) {
                violations.push(TreeViolation::DuplicateLabel {
                    group: group.clone(),
                    label: m.label.clone(),
                });
            }
        }
        let locals: Vec<T> = members.iter().filter_map(|m| m.local_priority).collect();
        if !locals.is_empty() && locals.len() == members.len() {
            let sum: T = locals.into_iter().sum();
            if (sum - T::one()).abs() > T::lit(SIBLING_SUM_TOLERANCE) {
                violations.push(TreeViolation::SiblingPrioritySum {
                    group: group.clone(),
                    sum: sum.as_f64(),
                });
            }
        }
    }
    let mut seen_alt = HashSet::new();
    for alt in &tree.alternatives {
        if alt.label.trim().is_empty() {
            violations.push(TreeViolation::EmptyLabel { level: 0 });
        }
        if !seen_alt.insert(alt.label.as_str()) {
            violations.push(TreeViolation::DuplicateLabel {
                group: "alternatives".into(),
                label: alt.label.clone(),
            });
        }
    }

    if let Some(shape) = expected {
        let top_count = tops.len();
        if top_count != shape.top_count {
            violations.push(TreeViolation::ShapeMismatch {
                what: "top-level criteria".into(),
                expected: shape.top_count,
                actual: top_count,
            });
        }
        for top in tree.top_level() {
            let kids = tree.children(&top.label).count();
            if kids != shape.sub_per_top {
                violations.push(TreeViolation::ShapeMismatch {
                    what: format!("sub-criteria under {:?}", top.label),
                    expected: shape.sub_per_top,
                    actual: kids,
                });
            }
        }
        if tree.alternatives.len() != shape.alt_count {
            violations.push(TreeViolation::ShapeMismatch {
                what: "alternatives".into(),
                expected: shape.alt_count,
                actual: tree.alternatives.len(),
            });
        }
    }
    TreeValidation { violations }
}

/// Multiplies each sub-criterion's local priority by its parent's, without
/// renormalizing. Top criteria get their local priority as global.
pub fn global_leaf_priorities_raw<T: Scalar>(
    tree: &HierarchyTree<T>,
) -> Result<HierarchyTree<T>, HierarchyError> {
    let report = validate_tree(tree, None);
    if !report.is_ok() {
        return Err(HierarchyError::Invalid(report.violations));
    }
    let mut parents: HashMap<String, T> = HashMap::new();
    for top in tree.top_level() {
        let local = top
            .local_priority
            .ok_or_else(|| HierarchyError::MissingLocalPriority(top.label.clone()))?;
        parents.insert(top.label.clone(), local);
    }
    let mut out = tree.clone();
    for node in &mut out.criteria {
        let local = node
            .local_priority
            .ok_or_else(|| HierarchyError::MissingLocalPriority(node.label.clone()))?;
        node.global_priority = Some(match &node.parent {
            Some(p) => parents[p] * local,
            None => local,
        });
    }
    Ok(out)
}

/// Global priorities with the leaf set rescaled to sum exactly to one,
/// absorbing rounding drift in the supplied locals.
pub fn global_leaf_priorities<T: Scalar>(
    tree: &HierarchyTree<T>,
) -> Result<HierarchyTree<T>, HierarchyError> {
    let mut out = global_leaf_priorities_raw(tree)?;
    let leaf_keys: HashSet<String> = out
        .leaves()
        .into_iter()
        .map(HierarchyTree::leaf_key)
        .collect();
    let total: T = out
        .leaves()
        .into_iter()
        .filter_map(|n| n.global_priority)
        .sum();
    if !total.is_positive_finite() {
        return Err(HierarchyError::Empty);
    }
    for node in &mut out.criteria {
        if leaf_keys.contains(&HierarchyTree::leaf_key(node)) {
            node.global_priority = node.global_priority.map(|g| g / total);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct AlternativeScores<T = f64> {
    pub labels: Vec<String>,
    pub scores: Vec<T>,
    /// Alternative labels by descending score, ties by ascending label.
    pub ranking: Vec<String>,
}

impl<T: Scalar> AlternativeScores<T> {
    pub fn best(&self) -> Option<&str> {
        self.ranking.first().map(String::as_str)
    }

    pub fn score_of(&self, label: &str) -> Option<T> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.scores[i])
    }
}

/// Weighted sum of per-leaf alternative priorities by leaf global priority.
///
/// `leaf_globals` fixes the leaf order; `alt_locals` must cover exactly the
/// same leaves. Alternative order follows the first leaf's vector.
pub fn score_alternatives<T: Scalar>(
    leaf_globals: &[(String, T)],
    alt_locals: &[(String, PriorityVector<T>)],
) -> Result<AlternativeScores<T>, HierarchyError> {
    if leaf_globals.is_empty() {
        return Err(HierarchyError::Empty);
    }
    let by_leaf: HashMap<&str, &PriorityVector<T>> =
        alt_locals.iter().map(|(k, v)| (k.as_str(), v)).collect();
    let wanted: BTreeSet<&str> = leaf_globals.iter().map(|(k, _)| k.as_str()).collect();
    let given: BTreeSet<&str> = by_leaf.keys().copied().collect();
    if wanted != given || alt_locals.len() != by_leaf.len() {
        return Err(HierarchyError::LeafSetMismatch {
            missing: wanted.difference(&given).map(|s| s.to_string()).collect(),
            unexpected: given.difference(&wanted).map(|s| s.to_string()).collect(),
        });
    }

    let labels = by_leaf[leaf_globals[0].0.as_str()].labels.clone();
    let label_set: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
    let mut scores = vec![T::zero(); labels.len()];
    for (leaf, global) in leaf_globals {
        let vector = by_leaf[leaf.as_str()];
        let set: BTreeSet<&str> = vector.labels.iter().map(String::as_str).collect();
        if set != label_set || vector.labels.len() != labels.len() {
            return Err(HierarchyError::AlternativeMismatch(leaf.clone()));
        }
        for (i, label) in labels.iter().enumerate() {
            let local = vector.weight_of(label).expect("label sets equal");
            scores[i] = scores[i] + *global * local;
        }
    }
    let ranking = rank(&labels, &scores);
    Ok(AlternativeScores {
        labels,
        scores,
        ranking,
    })
}

fn rank<T: Scalar>(labels: &[String], scores: &[T]) -> Vec<String> {
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| labels[a].cmp(&labels[b]))
    });
    idx.into_iter().map(|i| labels[i].clone()).collect()
}

/// Copies scores onto the tree's alternatives.
pub fn attach_scores<T: Scalar>(tree: &mut HierarchyTree<T>, scores: &AlternativeScores<T>) {
    for alt in &mut tree.alternatives {
        alt.score = scores.score_of(&alt.label);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    TextOutline,
    GraphDescription,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text-outline" | "outline" | "text" => Ok(Self::TextOutline),
            "graph-description" | "graph" | "dot" => Ok(Self::GraphDescription),
            other => Err(format!("unknown export format {other:?}")),
        }
    }
}

pub fn export_tree<T: Scalar>(tree: &HierarchyTree<T>, format: ExportFormat) -> String {
    match format {
        ExportFormat::TextOutline => outline(tree),
        ExportFormat::GraphDescription => graph(tree),
    }
}

fn priority_note<T: Scalar>(node: &CriterionNode<T>) -> String {
    match (node.local_priority, node.global_priority) {
        (Some(l), Some(g)) if node.level == 2 => {
            format!(" (local {:.4}, global {:.4})", l.as_f64(), g.as_f64())
        }
        (Some(l), _) => format!(" ({:.4})", l.as_f64()),
        (None, Some(g)) => format!(" (global {:.4})", g.as_f64()),
        (None, None) => String::new(),
    }
}

fn outline<T: Scalar>(tree: &HierarchyTree<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Goal: {}", tree.goal);
    for top in tree.top_level() {
        let _ = writeln!(out, "- {}{}", top.label, priority_note(top));
        for child in tree.children(&top.label) {
            let _ = writeln!(out, "    {}{}", child.label, priority_note(child));
        }
    }
    if !tree.alternatives.is_empty() {
        let _ = writeln!(out, "Alternatives:");
        for alt in &tree.alternatives {
            match alt.score {
                Some(s) => {
                    let _ = writeln!(out, "    {} ({:.4})", alt.label, s.as_f64());
                }
                None => {
                    let _ = writeln!(out, "    {}", alt.label);
                }
            }
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn graph<T: Scalar>(tree: &HierarchyTree<T>) -> String {
    let mut out = String::from("digraph ahp {\n  rankdir=TB;\n");
    let _ = writeln!(
        out,
        "  goal [label=\"{}\", shape=box];",
        dot_escape(&tree.goal)
    );
    let mut ids: HashMap<String, String> = HashMap::new();
    for (i, node) in tree.criteria.iter().enumerate() {
        let id = format!("c{i}");
        let _ = writeln!(out, "  {id} [label=\"{}\"];", dot_escape(&node.label));
        let key = match &node.parent {
            Some(p) => format!("{p}\u{0}{}", node.label),
            None => node.label.clone(),
        };
        ids.insert(key, id);
    }
    for (i, alt) in tree.alternatives.iter().enumerate() {
        let _ = writeln!(
            out,
            "  a{i} [label=\"{}\", shape=ellipse];",
            dot_escape(&alt.label)
        );
    }
    for top in tree.top_level() {
        let _ = writeln!(out, "  goal -> {};", ids[&top.label]);
        for child in tree.children(&top.label) {
            let _ = writeln!(
                out,
                "  {} -> {};",
                ids[&top.label],
                ids[&format!("{}\u{0}{}", top.label, child.label)]
            );
        }
    }
    for leaf in tree.leaves() {
        let key = match &leaf.parent {
            Some(p) => format!("{p}\u{0}{}", leaf.label),
            None => leaf.label.clone(),
        };
        for i in 0..tree.alternatives.len() {
            let _ = writeln!(out, "  {} -> a{i};", ids[&key]);
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_tree() -> HierarchyTree<f64> {
        let mut t = HierarchyTree::new("goal");
        t.add_criterion("A", Some(0.6))
            .add_criterion("B", Some(0.4));
        t.add_subcriterion("A", "A1", Some(0.5))
            .add_subcriterion("A", "A2", Some(0.5));
        t.add_subcriterion("B", "B1", Some(0.25))
            .add_subcriterion("B", "B2", Some(0.75));
        t.add_alternative("x").add_alternative("y");
        t
    }

    #[test]
    fn well_formed_tree_validates_against_its_shape() {
        let shape = ExpectedShape {
            top_count: 2,
            sub_per_top: 2,
            alt_count: 2,
        };
        assert!(validate_tree(&small_tree(), Some(shape)).is_ok());
    }

    #[test]
    fn orphan_and_shape_violations() {
        let mut t = small_tree();
        t.add_subcriterion("Missing", "Z", None);
        let v = validate_tree(
            &t,
            Some(ExpectedShape {
                top_count: 3,
                sub_per_top: 2,
                alt_count: 2,
            }),
        );
        assert!(v
            .violations
            .iter()
            .any(|x| matches!(x, TreeViolation::OrphanNode { .. })));
        assert!(v
            .violations
            .iter()
            .any(|x| x.to_string().starts_with("orphan node")));
        assert!(v.violations.iter().any(|x| matches!(
            x,
            TreeViolation::ShapeMismatch {
                expected: 3,
                actual: 2,
                ..
            }
        )));
    }

    #[test]
    fn duplicate_siblings_and_deep_levels_are_rejected() {
        let mut t = small_tree();
        t.add_subcriterion("A", "A1", None);
        t.criteria.push(CriterionNode {
            label: "deep".into(),
            level: 3,
            parent: Some("A1".into()),
            local_priority: None,
            global_priority: None,
        });
        let v = validate_tree(&t, None);
        assert!(v
            .violations
            .iter()
            .any(|x| matches!(x, TreeViolation::DuplicateLabel { .. })));
        assert!(v
            .violations
            .iter()
            .any(|x| matches!(x, TreeViolation::TooDeep { level: 3, .. })));
    }

    #[test]
    fn same_sub_label_under_different_parents_is_fine() {
        let mut t = HierarchyTree::<f64>::new("g");
        t.add_criterion("A", None).add_criterion("B", None);
        t.add_subcriterion("A", "Cost", None)
            .add_subcriterion("B", "Cost", None);
        assert!(validate_tree(&t, None).is_ok());
    }

    #[test]
    fn globals_multiply_down_the_tree() {
        let g = global_leaf_priorities(&small_tree()).unwrap();
        let globals = g.leaf_globals();
        let expected = [
            ("A > A1", 0.3),
            ("A > A2", 0.3),
            ("B > B1", 0.1),
            ("B > B2", 0.3),
        ];
        for ((k, v), (ek, ev)) in globals.iter().zip(expected) {
            assert_eq!(k, ek);
            assert!((v - ev).abs() < 1e-12);
        }
    }

    #[test]
    fn single_parent_product() {
        // Back-check: 0.264 x 0.427 = 0.1127 to four places.
        let mut t = HierarchyTree::<f64>::new("g");
        t.add_criterion("SLA", Some(0.264))
            .add_criterion("Other", Some(0.736));
        t.add_subcriterion("SLA", "Response Time Commitment", Some(0.427));
        t.add_subcriterion("SLA", "Rest", Some(0.573));
        let raw = global_leaf_priorities_raw(&t).unwrap();
        let g = raw.children("SLA").next().unwrap().global_priority.unwrap();
        assert!((g - 0.1127).abs() < 5e-5);
    }

    #[test]
    fn lone_top_criterion_keeps_locals() {
        let mut t = HierarchyTree::<f64>::new("g");
        t.add_criterion("Only", Some(1.0));
        for (l, w) in [("a", 0.5), ("b", 0.3), ("c", 0.2)] {
            t.add_subcriterion("Only", l, Some(w));
        }
        let g = global_leaf_priorities(&t).unwrap();
        for (node, w) in g.children("Only").zip([0.5, 0.3, 0.2]) {
            assert!((node.global_priority.unwrap() - w).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_local_priority_is_an_error() {
        let mut t = small_tree();
        t.criteria[2].local_priority = None;
        t.criteria[3].local_priority = Some(1.0);
        assert_eq!(
            global_leaf_priorities(&t).unwrap_err(),
            HierarchyError::MissingLocalPriority("A1".into())
        );
    }

    #[test]
    fn renormalization_absorbs_print_drift() {
        let mut t = HierarchyTree::<f64>::new("g");
        t.add_criterion("A", Some(0.5))
            .add_criterion("B", Some(0.5));
        let raw = global_leaf_priorities_raw(&t).unwrap();
        assert_eq!(raw.leaf_globals().len(), 2);
        t.criteria[0].local_priority = Some(0.4999999999);
        let g = global_leaf_priorities(&t).unwrap();
        let total: f64 = g.leaf_globals().iter().map(|(_, v)| v).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    fn vector(labels: &[&str], w: &[f64]) -> PriorityVector<f64> {
        PriorityVector {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            weights: w.to_vec(),
        }
    }

    #[test]
    fn one_leaf_scores_are_its_locals() {
        let s = score_alternatives(
            &[("L".into(), 1.0)],
            &[("L".into(), vector(&["x", "y", "z"], &[0.2, 0.5, 0.3]))],
        )
        .unwrap();
        assert_eq!(s.scores, vec![0.2, 0.5, 0.3]);
        assert_eq!(s.ranking, vec!["y", "z", "x"]);
        assert_eq!(s.best(), Some("y"));
    }

    #[test]
    fn identical_leaf_vectors_pass_through() {
        let v = vector(&["x", "y"], &[0.7, 0.3]);
        let s = score_alternatives(
            &[("a".into(), 0.9), ("b".into(), 0.1)],
            &[("a".into(), v.clone()), ("b".into(), v)],
        )
        .unwrap();
        assert!((s.scores[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn alternative_order_may_differ_between_leaves() {
        let s = score_alternatives(
            &[("a".into(), 0.5), ("b".into(), 0.5)],
            &[
                ("a".into(), vector(&["x", "y"], &[1.0, 0.0])),
                ("b".into(), vector(&["y", "x"], &[0.0, 1.0])),
            ],
        )
        .unwrap();
        assert_eq!(s.score_of("x"), Some(1.0));
    }

    #[test]
    fn ties_break_by_label() {
        let s = score_alternatives(
            &[("a".into(), 1.0)],
            &[("a".into(), vector(&["beta", "alpha"], &[0.5, 0.5]))],
        )
        .unwrap();
        assert_eq!(s.ranking, vec!["alpha", "beta"]);
    }

    #[test]
    fn mismatched_leaves_or_alternatives_fail() {
        let v = vector(&["x", "y"], &[0.5, 0.5]);
        assert!(matches!(
            score_alternatives(&[("a".into(), 1.0)], &[("b".into(), v.clone())]),
            Err(HierarchyError::LeafSetMismatch { .. })
        ));
        assert!(matches!(
            score_alternatives(
                &[("a".into(), 0.5), ("b".into(), 0.5)],
                &[("a".into(), v), ("b".into(), vector(&["x", "z"], &[0.5, 0.5]))]
            ),
            Err(HierarchyError::AlternativeMismatch(l)) if l == "b"
        ));
        assert_eq!(
            score_alternatives::<f64>(&[], &[]),
            Err(HierarchyError::Empty)
        );
    }

    #[test]
    fn outline_and_graph_are_deterministic() {
        let t = small_tree();
        let a = export_tree(&t, ExportFormat::TextOutline);
        assert_eq!(a, export_tree(&t, ExportFormat::TextOutline));
        assert!(a.starts_with("Goal: goal\n- A (0.6000)\n    A1"));
        assert!(a.contains("Alternatives:\n    x\n    y\n"));
        let d = export_tree(&t, ExportFormat::GraphDescription);
        assert!(d.starts_with("digraph ahp {"));
        assert!(d.contains("goal -> c0;"));
        assert!(d.contains("c0 -> c2;"));
        assert!(d.contains("c5 -> a1;"));
    }

    #[test]
    fn outline_without_alternatives_has_no_section() {
        let mut t = small_tree();
        t.alternatives.clear();
        assert!(!export_tree(&t, ExportFormat::TextOutline).contains("Alternatives"));
    }

    #[test]
    fn tree_json_round_trip() {
        let t = global_leaf_priorities(&small_tree()).unwrap();
        let text = serde_json::to_string(&t).unwrap();
        let back: HierarchyTree<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, t);
    }
}
