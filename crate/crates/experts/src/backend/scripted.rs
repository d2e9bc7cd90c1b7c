use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendError, BackendKind, Completion, ExpertBackend};
use crate::conversation::Conversation;
use crate::parse::{nearest_saaty, render_matrix_table};
use crate::persona::ExpertPersona;
use crate::prompt::{Intent, MatrixRequest, Prompt};

/// A literal reply rule. Empty `contains` matches every prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persona: Option<String>,
    pub contains: String,
    pub reply: String,
}

impl ScriptRule {
    pub fn new(persona: Option<&str>, contains: &str, reply: &str) -> Self {
        Self {
            persona: persona.map(str::to_string),
            contains: contains.into(),
            reply: reply.into(),
        }
    }

    fn matches(&self, persona: &ExpertPersona, prompt: &Prompt) -> bool {
        self.persona.as_deref().is_none_or(|p| p == persona.id)
            && prompt.text.contains(&self.contains)
    }
}

/// Computes replies. Implementations must be pure functions of their inputs.
pub trait Responder: Send + Sync {
    fn respond(
        &self,
        persona: &ExpertPersona,
        conversation: &Conversation,
        prompt: &Prompt,
    ) -> Option<String>;
}

/// Rules are tried in order, then responders in order.
#[derive(Clone, Default)]
pub struct ScriptedBackend {
    rules: Vec<ScriptRule>,
    responders: Vec<Arc<dyn Responder>>,
}

impl ScriptedBackend {
    pub fn from_rules(rules: Vec<ScriptRule>) -> Self {
        Self {
            rules,
            responders: Vec::new(),
        }
    }

    /// Reads a JSON array of rules.
    pub fn load_rules(path: &Path) -> Result<Vec<ScriptRule>, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("reading script {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| BackendError::Config(format!("script {}: {e}", path.display())))
    }

    pub fn with_responder(mut self, responder: Arc<dyn Responder>) -> Self {
        self.responders.push(responder);
        self
    }
}

impl ExpertBackend for ScriptedBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }

    fn complete(
        &self,
        persona: &ExpertPersona,
        conversation: &Conversation,
        prompt: &Prompt,
    ) -> Result<Completion, BackendError> {
        if let Some(rule) = self.rules.iter().find(|r| r.matches(persona, prompt)) {
            return Ok(Completion::text(rule.reply.clone()));
        }
        self.responders
            .iter()
            .find_map(|r| r.respond(persona, conversation, prompt))
            .map(Completion::text)
            .ok_or_else(|| BackendError::NoScriptedReply {
                persona: persona.id.clone(),
            })
    }
}

/// Platform-independent 64-bit hash of a sequence of strings.
pub fn stable_hash(parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0x1f]);
    }
    let digest = h.finalize();
    u64::from_be_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

const CRITERIA: [&str; 24] = [
    "Cost Efficiency",
    "Implementation Speed",
    "Staff Readiness",
    "Regulatory Fit",
    "Technical Maturity",
    "Operational Impact",
    "Vendor Reliability",
    "Scalability",
    "User Acceptance",
    "Risk Reduction",
    "Maintenance Burden",
    "Monitoring Coverage",
    "Incident Handling",
    "Policy Alignment",
    "Data Protection",
    "Service Continuity",
    "Training Needs",
    "Audit Readiness",
    "Integration Effort",
    "Long-term Value",
    "Stakeholder Support",
    "Resource Availability",
    "Process Maturity",
    "Change Resilience",
];

const SUB_SUFFIXES: [&str; 12] = [
    "Coverage",
    "Reliability",
    "Cost",
    "Speed",
    "Quality",
    "Oversight",
    "Flexibility",
    "Compliance",
    "Visibility",
    "Effort",
    "Accuracy",
    "Support",
];

const ALTERNATIVES: [&str; 16] = [
    "Staff Awareness Program",
    "Managed Service Contract",
    "In-house Tooling Upgrade",
    "Process Redesign Initiative",
    "Continuous Monitoring Platform",
    "Third-party Assessment",
    "Access Policy Overhaul",
    "Incident Drill Schedule",
    "Cloud Migration Plan",
    "Hardware Refresh Cycle",
    "Dedicated Response Team",
    "Automated Reporting Suite",
    "Vendor Consolidation",
    "Pilot Program Rollout",
    "Mentoring Network",
    "Compliance Review Board",
];

const TITLES: [&str; 10] = [
    "Strategy Consultant",
    "Operations Manager",
    "Risk Analyst",
    "Technical Architect",
    "Compliance Officer",
    "Financial Controller",
    "Human Factors Researcher",
    "Procurement Lead",
    "Quality Assurance Manager",
    "Field Operations Specialist",
];

const NAMES: [&str; 10] = [
    "Alex Morgan",
    "Priya Nair",
    "Tomasz Kowalski",
    "Grace Okafor",
    "Hiroshi Tanaka",
    "Sofia Lindqvist",
    "Daniel Reyes",
    "Amara Mensah",
    "Leon Fischer",
    "Mei Lin",
];

/// Deterministic stand-in for a language model. Each persona gets its own
/// stable vocabulary choices, scores and judgment weights, derived by
/// hashing the persona id with the prompt's subject. Matrices are built from
/// a hidden weight vector and snapped to the scale, so they are close to
/// consistent.
#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticExpert;

impl SyntheticExpert {
    fn answer(&self, persona: &ExpertPersona, intent: &Intent) -> String {
        let id = persona.id.as_str();
        match intent {
            Intent::Freeform => "Noted.".to_string(),
            Intent::AdviseExperts { .. } => {
                "For a decision of this weight, a group of 5-7 experts from complementary areas would be a good balance."
                    .to_string()
            }
            Intent::AdviseLevels { .. } => {
                "A two-level structure is usually enough: it gives detail without becoming hard to judge.".to_string()
            }
            Intent::Personas { count } => personas_reply(id, *count),
            Intent::ProposeCriteria { goal, count } => {
                numbered(&rotate_pick(&CRITERIA, stable_hash(&[id, goal]), *count))
            }
            Intent::ProposeAlternatives { goal, count } => {
                numbered(&rotate_pick(&ALTERNATIVES, stable_hash(&[id, "alternatives", goal]), *count))
            }
            Intent::ProposeSubcriteria { parents, count } => {
                let mut out = String::new();
                for parent in parents {
                    let head = parent.split_whitespace().next().unwrap_or("Item");
                    let picks = rotate_pick(&SUB_SUFFIXES, stable_hash(&[id, parent]), *count);
                    let labels: Vec<String> = picks.iter().map(|s| format!("{head} {s}")).collect();
                    out.push_str(&format!("{parent}:\n{}\n\n", numbered(&labels)));
                }
                out.trim_end().to_string()
            }
            Intent::Ballot { items, parent } => {
                let scope = parent.as_deref().unwrap_or("");
                items
                    .iter()
                    .map(|item| format!("{item}: {}", 1 + stable_hash(&[id, scope, item]) % 9))
                    .collect::<Vec<_>>()
                    .join("\n")
            }
            Intent::Matrices { requests } => requests
                .iter()
                .map(|r| render_matrix_table(&r.node, &synthetic_matrix(id, r)))
                .collect::<Vec<_>>()
                .join("\n\n"),
            Intent::Repair { original, .. } => self.answer(persona, original),
        }
    }
}

impl Responder for SyntheticExpert {
    fn respond(
        &self,
        persona: &ExpertPersona,
        _: &Conversation,
        prompt: &Prompt,
    ) -> Option<String> {
        Some(self.answer(persona, &prompt.intent))
    }
}

fn rotate_pick<S: AsRef<str>>(vocab: &[S], seed: u64, count: usize) -> Vec<String> {
    let start = (seed % vocab.len() as u64) as usize;
    (0..count)
        .map(|i| {
            let word = vocab[(start + i) % vocab.len()].as_ref();
            match i / vocab.len() {
                0 => word.to_string(),
                round => format!("{word} {}", round + 1),
            }
        })
        .collect()
}

fn numbered(items: &[String]) -> String {
    crate::prompt::numbered_list(items)
}

fn personas_reply(seed_id: &str, count: usize) -> String {
    let titles = rotate_pick(&TITLES, stable_hash(&[seed_id, "titles"]), count);
    let names = rotate_pick(&NAMES, stable_hash(&[seed_id, "names"]), count);
    titles
        .iter()
        .zip(&names)
        .map(|(title, name)| {
            format!(
                "{title}, {name}:\n\nBackground: {name} has long practical experience as a {lower}.\n\n\
                 Personality/Preferences: Methodical and candid, prefers evidence over intuition.",
                lower = title.to_lowercase()
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Upper triangle snapped from hidden weights; lower triangle exact reciprocals.
fn synthetic_matrix(persona: &str, request: &MatrixRequest) -> ahp_core::PairwiseMatrix {
    let weights: Vec<f64> = request
        .labels
        .iter()
        .map(|l| (1 + stable_hash(&[persona, &request.node, l]) % 9) as f64)
        .collect();
    let n = weights.len();
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            upper.push(nearest_saaty(weights[i] / weights[j]));
        }
    }
    ahp_core::PairwiseMatrix::from_upper_triangle(request.labels.clone(), &upper)
        .expect("labels are distinct and values positive")
}
