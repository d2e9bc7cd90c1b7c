//! Final synthesis and report rendering. A report is a pure function of the
//! session it is built from.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ahp_core::hierarchy::attach_scores;
use ahp_core::{
    global_leaf_priorities, score_alternatives, AlternativeScores, HierarchyTree, PriorityVector,
};
use ahp_experts::cost::format_cents;
use ahp_experts::{estimate_cost, BackendKind, CostReport, Role};
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;
use crate::session::{AggregateEntry, NodeKind, SessionState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub backend: BackendKind,
    pub aggregation: ahp_core::Aggregation,
    pub cr_threshold: f64,
    pub session_schema: String,
    pub session_version: u32,
    pub template_versions: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafPriority {
    pub parent: String,
    pub label: String,
    pub local: f64,
    pub global: f64,
}

/// One row per comparison matrix, expert or aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyEntry {
    pub node: String,
    pub kind: NodeKind,
    /// Expert id, or `aggregate`.
    pub source: String,
    pub order: usize,
    pub lambda_max: f64,
    pub ci: f64,
    pub cr: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyFlag {
    pub node: String,
    pub cr: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub experts: usize,
    pub criteria_candidates: usize,
    pub criteria_unique: usize,
    pub subcriteria_candidates: usize,
    pub alternative_candidates: usize,
    pub alternatives_unique: usize,
    pub expert_matrices: usize,
    pub aggregate_matrices: usize,
    pub leaf_criteria: usize,
    pub repairs: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub goal: String,
    pub provenance: Provenance,
    pub tree: HierarchyTree,
    pub top_priorities: PriorityVector,
    pub leaf_priorities: Vec<LeafPriority>,
    pub alternative_scores: AlternativeScores,
    pub best_alternative: String,
    pub consistency: Vec<ConsistencyEntry>,
    pub flags: Vec<InconsistencyFlag>,
    pub cost: CostReport,
    pub counts: Counts,
}

fn find<'a>(
    aggregates: &'a [AggregateEntry],
    kind: NodeKind,
    node: &str,
) -> Result<&'a AggregateEntry, PipelineError> {
    aggregates
        .iter()
        .find(|a| a.kind == kind && a.node == node)
        .ok_or(PipelineError::MissingArtifact("aggregate matrix"))
}

/// Builds the hierarchy with local and global priorities, scores the
/// alternatives and collects consistency, flags, counts and cost.
pub fn synthesize(session: &SessionState) -> Result<DecisionReport, PipelineError> {
    let a = &session.artifacts;
    let aggregates = a
        .aggregates
        .as_deref()
        .ok_or(PipelineError::MissingArtifact("aggregate matrices"))?;
    let criteria = a
        .criteria
        .as_ref()
        .ok_or(PipelineError::MissingArtifact("criteria"))?;
    let subs = a
        .subcriteria
        .as_ref()
        .ok_or(PipelineError::MissingArtifact("sub-criteria"))?;
    let alts = a
        .alternatives
        .as_ref()
        .ok_or(PipelineError::MissingArtifact("alternatives"))?;
    let goal = &session.config.decision.goal;

    let top = find(aggregates, NodeKind::Top, goal)?;
    let mut tree = HierarchyTree::new(goal.clone());
    for parent in &criteria.funnel.selected {
        tree.add_criterion(parent.clone(), top.priorities.weight_of(parent));
    }
    for group in &subs.parents {
        let sub = find(aggregates, NodeKind::Sub, &group.parent)?;
        for child in &group.funnel.selected {
            tree.add_subcriterion(
                group.parent.clone(),
                child.clone(),
                sub.priorities.weight_of(child),
            );
        }
    }
    for alt in &alts.funnel.selected {
        tree.add_alternative(alt.clone());
    }
    let mut tree = global_leaf_priorities(&tree)?;

    let leaf_globals = tree.leaf_globals();
    let mut alt_locals = Vec::with_capacity(leaf_globals.len());
    for (leaf, _) in &leaf_globals {
        alt_locals.push((
            leaf.clone(),
            find(aggregates, NodeKind::Alternatives, leaf)?
                .priorities
                .clone(),
        ));
    }
    let scores = score_alternatives(&leaf_globals, &alt_locals)?;
    attach_scores(&mut tree, &scores);

    let leaf_priorities = tree
        .leaves()
        .into_iter()
        .map(|n| LeafPriority {
            parent: n.parent.clone().unwrap_or_default(),
            label: n.label.clone(),
            local: n.local_priority.unwrap_or(0.0),
            global: n.global_priority.unwrap_or(0.0),
        })
        .collect();

    let threshold = session.config.judgment.cr_threshold;
    let mut consistency = Vec::new();
    let mut flags = Vec::new();
    for agg in aggregates {
        for (expert, c) in &agg.expert_consistency {
            consistency.push(entry(agg, expert, c));
        }
        consistency.push(entry(agg, "aggregate", &agg.consistency));
        if agg.flagged {
            flags.push(InconsistencyFlag {
                node: agg.node.clone(),
                cr: agg.consistency.cr,
                threshold,
            });
        }
    }

    let cost = session_cost(session)?;
    let counts = Counts {
        experts: session.personas()?.len(),
        criteria_candidates: criteria.funnel.pool.len(),
        criteria_unique: criteria.funnel.deduped.pool.len(),
        subcriteria_candidates: subs.parents.iter().map(|p| p.funnel.pool.len()).sum(),
        alternative_candidates: alts.funnel.pool.len(),
        alternatives_unique: alts.funnel.deduped.pool.len(),
        expert_matrices: aggregates.iter().map(|g| g.expert_consistency.len()).sum(),
        aggregate_matrices: aggregates.len(),
        leaf_criteria: leaf_globals.len(),
        repairs: a.repairs.iter().map(|r| r.repairs).sum(),
    };

    Ok(DecisionReport {
        goal: goal.clone(),
        provenance: Provenance {
            backend: session.config.backend.kind,
            aggregation: session.config.judgment.aggregation,
            cr_threshold: threshold,
            session_schema: session.schema.clone(),
            session_version: session.version,
            template_versions: session.template_versions.clone(),
        },
        best_alternative: scores.best().unwrap_or_default().to_string(),
        top_priorities: top.priorities.clone(),
        tree,
        leaf_priorities,
        alternative_scores: scores,
        consistency,
        flags,
        cost,
        counts,
    })
}

fn entry(agg: &AggregateEntry, source: &str, c: &ahp_core::ConsistencyReport) -> ConsistencyEntry {
    ConsistencyEntry {
        node: agg.node.clone(),
        kind: agg.kind,
        source: source.to_string(),
        order: agg.matrix.order(),
        lambda_max: c.lambda_max,
        ci: c.ci,
        cr: c.cr,
        consistent: c.consistent,
    }
}

/// Prices every conversation in the session, archived ones included.
/// Failed-attempt transcripts are not billed.
pub fn session_cost(session: &SessionState) -> Result<CostReport, PipelineError> {
    cost_with_pricing(session, &session.config.pricing)
}

pub fn cost_with_pricing(
    session: &SessionState,
    pricing: &ahp_experts::Pricing,
) -> Result<CostReport, PipelineError> {
    let roles: BTreeMap<&str, Role> = session
        .artifacts
        .personas
        .iter()
        .flatten()
        .map(|p| (p.id.as_str(), p.role))
        .chain(std::iter::once((
            ahp_experts::persona::GUIDE_ID,
            Role::Guide,
        )))
        .collect();
    let conversations = session.conversations.values().flat_map(|log| log.all());
    Ok(estimate_cost(
        conversations,
        |id| roles.get(id).copied(),
        pricing,
    )?)
}

impl DecisionReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Sections in order: top-level priorities, sub-criteria globals,
    /// alternative scores, consistency, cost.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# Decision report\n\nGoal: {}\n", self.goal);
        let _ = writeln!(
            out,
            "Backend: {}. Aggregation: {:?}. CR threshold: {}.\n",
            self.provenance.backend, self.provenance.aggregation, self.provenance.cr_threshold
        );

        let _ = writeln!(out, "## Top-level criteria priorities\n");
        let _ = writeln!(out, "| # | Criterion | Priority |\n|---|---|---|");
        for (i, (label, w)) in self.top_priorities.iter().enumerate() {
            let _ = writeln!(out, "| {} | {label} | {w:.3} |", i + 1);
        }
        if let Some(top) = self
            .consistency
            .iter()
            .find(|c| c.kind == NodeKind::Top && c.source == "aggregate")
        {
            let _ = writeln!(
                out,
                "\nConsistency Index (CI): {:.3}. Consistency Ratio (CR): {:.3}. Lambda max: {:.2}.",
                top.ci, top.cr, top.lambda_max
            );
        }

        let _ = writeln!(out, "\n## Sub-criteria global priorities\n");
        let _ = writeln!(
            out,
            "| # | Sub-criterion | Parent | Local | Global |\n|---|---|---|---|---|"
        );
        let mut leaves: Vec<&LeafPriority> = self.leaf_priorities.iter().collect();
        leaves.sort_by(|a, b| {
            b.global
                .total_cmp(&a.global)
                .then_with(|| a.label.cmp(&b.label))
        });
        for (i, l) in leaves.iter().enumerate() {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.4} | {:.4} |",
                i + 1,
                l.label,
                l.parent,
                l.local,
                l.global
            );
        }

        let _ = writeln!(out, "\n## Alternative scores\n");
        let _ = writeln!(out, "| Rank | Alternative | Score |\n|---|---|---|");
        for (i, label) in self.alternative_scores.ranking.iter().enumerate() {
            let score = self.alternative_scores.score_of(label).unwrap_or(0.0);
            let _ = writeln!(out, "| {} | {label} | {score:.4} |", i + 1);
        }
        let _ = writeln!(out, "\nBest alternative: {}", self.best_alternative);

        let _ = writeln!(out, "\n## Consistency\n");
        let aggregates: Vec<&ConsistencyEntry> = self
            .consistency
            .iter()
            .filter(|c| c.source == "aggregate")
            .collect();
        let experts = self.consistency.len() - aggregates.len();
        let expert_ok = self
            .consistency
            .iter()
            .filter(|c| c.source != "aggregate" && c.consistent)
            .count();
        let _ = writeln!(
            out,
            "{} expert matrices ({} below the threshold) and {} aggregate matrices.\n",
            experts,
            expert_ok,
            aggregates.len()
        );
        let _ = writeln!(
            out,
            "| Aggregate | n | Lambda max | CI | CR | Verdict |\n|---|---|---|---|---|---|"
        );
        for c in &aggregates {
            let verdict = if c.consistent {
                "consistent"
            } else {
                "FLAGGED"
            };
            let _ = writeln!(
                out,
                "| {} | {} | {:.4} | {:.4} | {:.4} | {verdict} |",
                c.node, c.order, c.lambda_max, c.ci, c.cr
            );
        }
        if self.flags.is_empty() {
            let _ = writeln!(out, "\nNo aggregate matrix reached the CR threshold.");
        } else {
            let _ = writeln!(out, "\nFlagged aggregates:");
            for f in &self.flags {
                let _ = writeln!(out, "- {} (CR {:.4} >= {})", f.node, f.cr, f.threshold);
            }
        }

        let _ = writeln!(out, "\n## Cost\n");
        let _ = writeln!(out, "| Persona | Role | Tokens | Cost |\n|---|---|---|---|");
        for p in &self.cost.per_persona {
            let role = match p.role {
                Role::Guide => "guide",
                Role::Expert => "expert",
            };
            let _ = writeln!(
                out,
                "| {} | {role} | {} | {} |",
                p.persona,
                p.tokens,
                format_cents(p.cents)
            );
        }
        let _ = writeln!(
            out,
            "\nPanel: {}. Guide: {}. Total: {} (about ${}).\n\nRounding: {}.",
            format_cents(self.cost.panel_cents),
            format_cents(self.cost.guide_cents),
            format_cents(self.cost.total_cents),
            self.cost.headline_dollars,
            self.cost.rounding_rule
        );
        out
    }
}
