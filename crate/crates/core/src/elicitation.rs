//! Candidate pooling, deduplication and score voting.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest and highest admissible ballot score.
pub const MIN_SCORE: u8 = 1;
pub const MAX_SCORE: u8 = 9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ElicitationError {
    #[error("label is empty")]
    EmptyLabel,
    #[error("ballot from {expert} does not score {label:?}")]
    MissingItem { expert: String, label: String },
    #[error("ballot from {expert} scores unknown item {label:?}")]
    UnknownItem { expert: String, label: String },
    #[error("ballot from {expert} scores {label:?} more than once")]
    DuplicateScore { expert: String, label: String },
    #[error(
        "ballot from {expert} gives {label:?} score {score}, outside {MIN_SCORE}..={MAX_SCORE}"
    )]
    ScoreOutOfRange {
        expert: String,
        label: String,
        score: u8,
    },
    #[error("cannot select {requested} items from {available}")]
    NotEnoughItems { requested: usize, available: usize },
    #[error("no ballots to tally")]
    NoBallots,
}

/// Trimmed, whitespace-collapsed, lower-cased form used for matching.
/// No stemming: "Protocol" and "Protocols" stay distinct.
pub fn normalize_label(raw: &str) -> Result<String, ElicitationError> {
    let canonical = raw
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    if canonical.is_empty() {
        Err(ElicitationError::EmptyLabel)
    } else {
        Ok(canonical)
    }
}

/// Display form: trimmed and whitespace-collapsed, casing kept.
pub fn tidy_label(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn word_count(label: &str) -> usize {
    label.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub proposer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum PoolStage {
    Criteria,
    SubCriteria { parent: String },
    Alternatives,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub stage: PoolStage,
    pub items: Vec<Candidate>,
}

impl CandidatePool {
    pub fn new(stage: PoolStage) -> Self {
        Self {
            stage,
            items: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, proposer: impl Into<String>) {
        self.items.push(Candidate {
            label: label.into(),
            proposer: proposer.into(),
        });
    }

    pub fn labels(&self) -> Vec<String> {
        self.items.iter().map(|c| c.label.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Explicit label equivalences: an item whose canonical label is a key is
/// dropped when an item with the mapped canonical label is in the pool.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AliasTable(BTreeMap<String, String>);

impl AliasTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, alias: &str, target: &str) -> Result<(), ElicitationError> {
        self.0
            .insert(normalize_label(alias)?, normalize_label(target)?);
        Ok(())
    }

    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, ElicitationError> {
        let mut t = Self::new();
        for (a, b) in pairs {
            t.insert(a, b)?;
        }
        Ok(t)
    }

    pub fn target(&self, canonical: &str) -> Option<&str> {
        self.0.get(canonical).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    /// Canonical label already proposed earlier.
    Duplicate,
    /// Listed alias of another pooled label.
    Alias,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub label: String,
    pub proposer: String,
    pub kept: String,
    pub reason: RemovalReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deduped {
    pub pool: CandidatePool,
    pub removed: Vec<Removal>,
}

/// Keeps the first proposal of each canonical label and drops listed
/// aliases whose target is present. Items with empty labels are dropped
/// as well (they cannot be matched).
pub fn dedupe(pool: &CandidatePool, aliases: &AliasTable) -> Deduped {
    let canon: Vec<Option<String>> = pool
        .items
        .iter()
        .map(|c| normalize_label(&c.label).ok())
        .collect();
    let mut first_with: HashMap<&str, &str> = HashMap::new();
    for (c, item) in canon.iter().zip(&pool.items) {
        if let Some(c) = c {
            first_with.entry(c.as_str()).or_insert(item.label.as_str());
        }
    }
    let mut seen: HashSet<&str> = HashSet::new();
    let mut out = CandidatePool::new(pool.stage.clone());
    let mut removed = Vec::new();
    for (c, item) in canon.iter().zip(&pool.items) {
        let Some(c) = c else { continue };
        if let Some(target) = aliases.target(c) {
            if target != c {
                if let Some(kept) = first_with.get(target) {
                    removed.push(Removal {
                        label: item.label.clone(),
                        proposer: item.proposer.clone(),
                        kept: kept.to_string(),
                        reason: RemovalReason::Alias,
                    });
                    continue;
                }
            }
        }
        if !seen.insert(c.as_str()) {
            removed.push(Removal {
                label: item.label.clone(),
                proposer: item.proposer.clone(),
                kept: first_with[c.as_str()].to_string(),
                reason: RemovalReason::Duplicate,
            });
            continue;
        }
        out.items.push(item.clone());
    }
    Deduped { pool: out, removed }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreBallot {
    pub expert: String,
    /// `(label, score)` in the order the expert gave them.
    pub scores: Vec<(String, u8)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemTotal {
    pub label: String,
    pub total: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyResult {
    /// Totals in pool order.
    pub totals: Vec<ItemTotal>,
    pub ballots: usize,
}

impl TallyResult {
    pub fn total_of(&self, label: &str) -> Option<u32> {
        self.totals
            .iter()
            .find(|t| t.label == label)
            .map(|t| t.total)
    }
}

/// Sums each item's scores over all ballots. Every ballot must score every
/// pooled item exactly once, within 1..=9.
pub fn tally(
    ballots: &[ScoreBallot],
    pool: &CandidatePool,
) -> Result<TallyResult, ElicitationError> {
    if ballots.is_empty() {
        return Err(ElicitationError::NoBallots);
    }
    let keys: Vec<String> = pool
        .items
        .iter()
        .map(|c| normalize_label(&c.label))
        .collect::<Result<_, _>>()?;
    let index: HashMap<&str, usize> = keys
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();
    let mut totals = vec![0u32; keys.len()];
    for ballot in ballots {
        let mut scored = vec![false; keys.len()];
        for (label, score) in &ballot.scores {
            let unknown = || ElicitationError::UnknownItem {
                expert: ballot.expert.clone(),
                label: label.clone(),
            };
            let key = normalize_label(label).map_err(|_| unknown())?;
            let &i = index.get(key.as_str()).ok_or_else(unknown)?;
            if scored[i] {
                return Err(ElicitationError::DuplicateScore {
                    expert: ballot.expert.clone(),
                    label: label.clone(),
                });
            }
            if !(MIN_SCORE..=MAX_SCORE).contains(score) {
                return Err(ElicitationError::ScoreOutOfRange {
                    expert: ballot.expert.clone(),
                    label: label.clone(),
                    score: *score,
                });
            }
            scored[i] = true;
            totals[i] += u32::from(*score);
        }
        if let Some(i) = scored.iter().position(|s| !s) {
            return Err(ElicitationError::MissingItem {
                expert: ballot.expert.clone(),
                label: pool.items[i].label.clone(),
            });
        }
    }
    Ok(TallyResult {
        totals: pool
            .items
            .iter()
            .zip(totals)
            .map(|(c, total)| ItemTotal {
                label: c.label.clone(),
                total,
            })
            .collect(),
        ballots: ballots.len(),
    })
}

/// The `n` highest totals; ties go to the lexicographically smaller
/// canonical label.
pub fn select_top_n(tally: &TallyResult, n: usize) -> Result<Vec<String>, ElicitationError> {
    if n > tally.totals.len() {
        return Err(ElicitationError::NotEnoughItems {
            requested: n,
            available: tally.totals.len(),
        });
    }
    let mut order: Vec<(&ItemTotal, String)> = tally
        .totals
        .iter()
        .map(|t| (t, normalize_label(&t.label).unwrap_or_default()))
        .collect();
    order.sort_by(|(a, ka), (b, kb)| b.total.cmp(&a.total).then_with(|| ka.cmp(kb)));
    Ok(order
        .into_iter()
        .take(n)
        .map(|(t, _)| t.label.clone())
        .collect())
}
