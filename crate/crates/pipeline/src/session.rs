//! Persisted run state: configuration, stage cursor, artifacts and every
//! conversation. Saved atomically after each stage.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ahp_core::elicitation::{CandidatePool, Deduped, ScoreBallot, TallyResult};
use ahp_core::{ConsistencyReport, PairwiseMatrix, PriorityVector};
use ahp_experts::persona::ExpertPersona;
use ahp_experts::Conversation;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::PipelineError;
use crate::report::DecisionReport;

pub const SESSION_SCHEMA: &str = "ahp-session";
pub const SESSION_VERSION: u32 = 1;

/// Stage cursor. The cursor names the next stage to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Init,
    Advise,
    Personas,
    Criteria,
    Subcriteria,
    Alternatives,
    PairwiseTop,
    PairwiseSub,
    PairwiseAlt,
    Aggregate,
    Synthesize,
    Done,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Init,
        Stage::Advise,
        Stage::Personas,
        Stage::Criteria,
        Stage::Subcriteria,
        Stage::Alternatives,
        Stage::PairwiseTop,
        Stage::PairwiseSub,
        Stage::PairwiseAlt,
        Stage::Aggregate,
        Stage::Synthesize,
        Stage::Done,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Init => "init",
            Stage::Advise => "advise",
            Stage::Personas => "personas",
            Stage::Criteria => "criteria",
            Stage::Subcriteria => "subcriteria",
            Stage::Alternatives => "alternatives",
            Stage::PairwiseTop => "pairwise_top",
            Stage::PairwiseSub => "pairwise_sub",
            Stage::PairwiseAlt => "pairwise_alt",
            Stage::Aggregate => "aggregate",
            Stage::Synthesize => "synthesize",
            Stage::Done => "done",
        }
    }

    /// The stage after this one; `Done` is terminal.
    pub fn next(self) -> Stage {
        let i = Stage::ALL
            .iter()
            .position(|s| *s == self)
            .expect("stage is listed");
        Stage::ALL.get(i + 1).copied().unwrap_or(Stage::Done)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == key)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advice {
    pub skipped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggested_experts: Option<(u32, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggested_levels: Option<u32>,
    pub experts: usize,
    pub levels: u32,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub expert: String,
    pub labels: Vec<String>,
}

/// One scored candidate funnel: proposals, pooled, deduplicated, voted, cut.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Funnel {
    pub pool: CandidatePool,
    pub deduped: Deduped,
    pub ballots: Vec<ScoreBallot>,
    pub tally: TallyResult,
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemStage {
    pub proposals: Vec<Proposal>,
    pub funnel: Funnel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupProposal {
    pub expert: String,
    pub groups: Vec<(String, Vec<String>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentFunnel {
    pub parent: String,
    pub funnel: Funnel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubcriteriaStage {
    pub proposals: Vec<GroupProposal>,
    pub parents: Vec<ParentFunnel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// Top-level criteria against the goal.
    Top,
    /// Sub-criteria of one top criterion.
    Sub,
    /// Alternatives under one leaf criterion.
    Alternatives,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertMatrix {
    pub expert: String,
    pub matrix: PairwiseMatrix,
}

/// Every expert's matrix for one comparison node, in panel order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeJudgments {
    /// Goal text, parent label, or leaf key `Parent > Child`.
    pub node: String,
    pub kind: NodeKind,
    pub labels: Vec<String>,
    pub experts: Vec<ExpertMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateEntry {
    pub node: String,
    pub kind: NodeKind,
    pub matrix: PairwiseMatrix,
    pub priorities: PriorityVector,
    pub consistency: ConsistencyReport,
    /// Per expert, in panel order.
    pub expert_consistency: Vec<(String, ConsistencyReport)>,
    /// CR at or above the threshold.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairRecord {
    pub stage: Stage,
    pub persona: String,
    pub repairs: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub stage: Stage,
    pub persona: Option<String>,
    pub error: String,
    /// The failing persona's conversation at the time of failure. Never
    /// merged into the live archive, so a retry starts clean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Conversation>,
}

/// All conversations of one persona: rotated-out ones plus the active one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaLog {
    pub archived: Vec<Conversation>,
    pub active: Conversation,
}

impl PersonaLog {
    pub fn new(persona: &ExpertPersona) -> Self {
        Self {
            archived: Vec::new(),
            active: Conversation::new(persona),
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &Conversation> {
        self.archived.iter().chain(std::iter::once(&self.active))
    }

    /// Starts a fresh conversation; an empty active one is replaced in place.
    pub fn rotate(&mut self, carryover: &str) {
        if self.active.messages.is_empty() {
            self.active.preamble = (!carryover.trim().is_empty()).then(|| carryover.to_string());
            return;
        }
        let fresh = ahp_experts::rotate_conversation(&self.active, carryover);
        self.archived
            .push(std::mem::replace(&mut self.active, fresh));
    }
}

/// Stage outputs. Each field is written once, by its stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advice: Option<Advice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub personas: Option<Vec<ExpertPersona>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<ItemStage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcriteria: Option<SubcriteriaStage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternatives: Option<ItemStage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairwise_top: Option<Vec<NodeJudgments>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairwise_sub: Option<Vec<NodeJudgments>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairwise_alt: Option<Vec<NodeJudgments>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregates: Option<Vec<AggregateEntry>>,
    #[serde(default)]
    pub repairs: Vec<RepairRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub schema: String,
    pub version: u32,
    pub config: PipelineConfig,
    /// Directory that relative paths in `config` resolve against. A relative
    /// value is itself relative to the session file's directory.
    pub base_dir: String,
    pub stage: Stage,
    /// Scripted and replay runs use no randomness; recorded for audit.
    pub deterministic: bool,
    pub template_versions: BTreeMap<String, String>,
    pub artifacts: Artifacts,
    pub conversations: BTreeMap<String, PersonaLog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DecisionReport>,
    #[serde(default)]
    pub failures: Vec<FailureRecord>,
}

impl SessionState {
    pub fn new(
        config: PipelineConfig,
        base_dir: &str,
        template_versions: BTreeMap<String, String>,
    ) -> Self {
        let deterministic = config.backend.kind != ahp_experts::BackendKind::Live;
        Self {
            schema: SESSION_SCHEMA.to_string(),
            version: SESSION_VERSION,
            config,
            base_dir: base_dir.to_string(),
            stage: Stage::Init,
            deterministic,
            template_versions,
            artifacts: Artifacts::default(),
            conversations: BTreeMap::new(),
            report: None,
            failures: Vec::new(),
        }
    }

    pub fn personas(&self) -> Result<&[ExpertPersona], PipelineError> {
        self.artifacts
            .personas
            .as_deref()
            .ok_or(PipelineError::MissingArtifact("expert panel"))
    }

    pub fn is_done(&self) -> bool {
        self.stage == Stage::Done
    }

    /// Resolves `base_dir` given where the session file lives.
    pub fn resolved_base(&self, session_path: Option<&Path>) -> PathBuf {
        let base = Path::new(&self.base_dir);
        if base.is_absolute() {
            return base.to_path_buf();
        }
        let dir = session_path
            .and_then(Path::parent)
            .filter(|p| !p.as_os_str().is_empty());
        match dir {
            Some(d) => d.join(base),
            None => base.to_path_buf(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("session serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| PipelineError::Session(format!("not valid JSON: {e}")))?;
        match value.get("schema").and_then(|v| v.as_str()) {
            Some(SESSION_SCHEMA) => {}
            other => {
                return Err(PipelineError::Session(format!(
                    "schema is {other:?}, expected {SESSION_SCHEMA:?}"
                )))
            }
        }
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| PipelineError::Session("missing version".into()))?;
        if version != u64::from(SESSION_VERSION) {
            return Err(PipelineError::SchemaVersion {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                supported: SESSION_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| PipelineError::Session(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Writes to a sibling temporary file, then renames it over `path`.
    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| PipelineError::io(path, "not a file path"))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes).map_err(|e| PipelineError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        PipelineError::io(path, e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> SessionState {
        SessionState::new(PipelineConfig::with_goal("g"), ".", BTreeMap::new())
    }

    #[test]
    fn stages_are_ordered() {
        assert_eq!(Stage::Init.next(), Stage::Advise);
        assert_eq!(Stage::Synthesize.next(), Stage::Done);
        assert_eq!(Stage::Done.next(), Stage::Done);
        assert!(Stage::Criteria < Stage::PairwiseTop);
        assert_eq!("pairwise-alt".parse::<Stage>().unwrap(), Stage::PairwiseAlt);
        for s in Stage::ALL {
            assert_eq!(s.as_str().parse::<Stage>().unwrap(), s);
        }
    }

    #[test]
    fn json_round_trip_and_atomic_save() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = session();
        s.save(&path).unwrap();
        assert_eq!(SessionState::load(&path).unwrap(), s);
        let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn newer_schema_is_rejected() {
        let text = session()
            .to_json()
            .replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(
            SessionState::from_json(&text),
            Err(PipelineError::SchemaVersion {
                found: 2,
                supported: 1
            })
        ));
        assert!(matches!(
            SessionState::from_json("{"),
            Err(PipelineError::Session(_))
        ));
        assert!(matches!(
            SessionState::from_json("{\"schema\":\"x\"}"),
            Err(PipelineError::Session(_))
        ));
    }

    #[test]
    fn relative_base_follows_the_session_file() {
        let s = session();
        assert_eq!(
            s.resolved_base(Some(Path::new("/a/b/s.json"))),
            PathBuf::from("/a/b/.")
        );
        assert_eq!(
            s.resolved_base(Some(Path::new("s.json"))),
            PathBuf::from(".")
        );
    }
}
