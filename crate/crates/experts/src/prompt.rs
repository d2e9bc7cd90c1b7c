//! Prompt templates and the structured intent that travels with each prompt.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Placeholder names a template may use.
pub const PLACEHOLDERS: [&str; 6] = [
    "goal",
    "n",
    "items",
    "alternatives",
    "parent",
    "scale_instructions",
];

/// Default answer-format block bound to `{scale_instructions}`.
pub const SCALE_INSTRUCTIONS: &str = "Use only values from the Saaty scale: 1/9, 1/8, 1/7, 1/6, 1/5, 1/4, 1/3, 1/2, 1, 2, 3, 4, 5, 6, 7, 8, 9. \
Present each matrix as a markdown table under a heading that names what is being compared, \
with the items as row and column headers in the order given. \
The diagonal is 1 and each entry below the diagonal is the reciprocal of its mirror above it.";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template {template}: placeholder {{{name}}} is not bound")]
    UnboundPlaceholder { template: String, name: String },
    #[error("template {template}: binding {name:?} has no matching placeholder")]
    UnknownBinding { template: String, name: String },
    #[error("template {template}: {{{name}}} is not a recognised placeholder")]
    UnknownPlaceholder { template: String, name: String },
    #[error("unknown template name {0:?}")]
    UnknownTemplate(String),
    #[error("reading template {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    AdviseExperts,
    AdviseLevels,
    Personas,
    Criteria,
    CriteriaBallot,
    Subcriteria,
    SubcriteriaBallot,
    Alternatives,
    AlternativesBallot,
    PairwiseTop,
    PairwiseSub,
    PairwiseAlt,
    Repair,
    Carryover,
}

impl TemplateName {
    pub const ALL: [TemplateName; 14] = [
        Self::AdviseExperts,
        Self::AdviseLevels,
        Self::Personas,
        Self::Criteria,
        Self::CriteriaBallot,
        Self::Subcriteria,
        Self::SubcriteriaBallot,
        Self::Alternatives,
        Self::AlternativesBallot,
        Self::PairwiseTop,
        Self::PairwiseSub,
        Self::PairwiseAlt,
        Self::Repair,
        Self::Carryover,
    ];

    /// File stem of the template, `<stem>.txt`.
    pub fn file_stem(self) -> &'static str {
        match self {
            Self::AdviseExperts => "advise_experts",
            Self::AdviseLevels => "advise_levels",
            Self::Personas => "personas",
            Self::Criteria => "criteria",
            Self::CriteriaBallot => "criteria_ballot",
            Self::Subcriteria => "subcriteria",
            Self::SubcriteriaBallot => "subcriteria_ballot",
            Self::Alternatives => "alternatives",
            Self::AlternativesBallot => "alternatives_ballot",
            Self::PairwiseTop => "pairwise_top",
            Self::PairwiseSub => "pairwise_sub",
            Self::PairwiseAlt => "pairwise_alt",
            Self::Repair => "repair",
            Self::Carryover => "carryover",
        }
    }

    fn builtin_body(self) -> &'static str {
        match self {
            Self::AdviseExperts => include_str!("../templates/advise_experts.txt"),
            Self::AdviseLevels => include_str!("../templates/advise_levels.txt"),
            Self::Personas => include_str!("../templates/personas.txt"),
            Self::Criteria => include_str!("../templates/criteria.txt"),
            Self::CriteriaBallot => include_str!("../templates/criteria_ballot.txt"),
            Self::Subcriteria => include_str!("../templates/subcriteria.txt"),
            Self::SubcriteriaBallot => include_str!("../templates/subcriteria_ballot.txt"),
            Self::Alternatives => include_str!("../templates/alternatives.txt"),
            Self::AlternativesBallot => include_str!("../templates/alternatives_ballot.txt"),
            Self::PairwiseTop => include_str!("../templates/pairwise_top.txt"),
            Self::PairwiseSub => include_str!("../templates/pairwise_sub.txt"),
            Self::PairwiseAlt => include_str!("../templates/pairwise_alt.txt"),
            Self::Repair => include_str!("../templates/repair.txt"),
            Self::Carryover => include_str!("../templates/carryover.txt"),
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_stem())
    }
}

impl FromStr for TemplateName {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.file_stem() == s)
            .ok_or_else(|| TemplateError::UnknownTemplate(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    name: String,
    body: String,
    pieces: Vec<Piece>,
}

impl PromptTemplate {
    /// Parses `body`. `{name}` is a placeholder, `{{` and `}}` are literal
    /// braces, and any other brace is literal text.
    pub fn new(name: &str, body: &str) -> Result<Self, TemplateError> {
        let pieces = split_pieces(body);
        for p in &pieces {
            if let Piece::Slot(slot) = p {
                if !PLACEHOLDERS.contains(&slot.as_str()) {
                    return Err(TemplateError::UnknownPlaceholder {
                        template: name.into(),
                        name: slot.clone(),
                    });
                }
            }
        }
        Ok(Self {
            name: name.to_string(),
            body: body.to_string(),
            pieces,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn placeholders(&self) -> BTreeSet<&str> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Slot(s) => Some(s.as_str()),
                Piece::Text(_) => None,
            })
            .collect()
    }

    /// First 12 hex digits of the body's SHA-256.
    pub fn version(&self) -> String {
        hex::encode(Sha256::digest(self.body.as_bytes()))[..12].to_string()
    }

    /// Substitutes every placeholder. Every placeholder must be bound and
    /// every binding must be used.
    pub fn render(&self, bindings: &Bindings) -> Result<String, TemplateError> {
        let used = self.placeholders();
        if let Some(extra) = bindings.0.keys().find(|k| !used.contains(k.as_str())) {
            return Err(TemplateError::UnknownBinding {
                template: self.name.clone(),
                name: extra.clone(),
            });
        }
        let mut out = String::with_capacity(self.body.len());
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(s) => match bindings.0.get(s) {
                    Some(v) => out.push_str(v),
                    None => {
                        return Err(TemplateError::UnboundPlaceholder {
                            template: self.name.clone(),
                            name: s.clone(),
                        })
                    }
                },
            }
        }
        Ok(out)
    }
}

fn split_pieces(body: &str) -> Vec<Piece> {
    let mut pieces = Vec::new();
    let mut text = String::new();
    let mut rest = body;
    while let Some(ch) = rest.chars().next() {
        if rest.starts_with("{{") {
            text.push('{');
            rest = &rest[2..];
        } else if rest.starts_with("}}") {
            text.push('}');
            rest = &rest[2..];
        } else if ch == '{' {
            let name_len = rest[1..]
                .find(|c: char| !(c.is_ascii_lowercase() || c == '_'))
                .unwrap_or(rest.len() - 1);
            if name_len > 0 && rest[1 + name_len..].starts_with('}') {
                if !text.is_empty() {
                    pieces.push(Piece::Text(std::mem::take(&mut text)));
                }
                pieces.push(Piece::Slot(rest[1..1 + name_len].to_string()));
                rest = &rest[name_len + 2..];
            } else {
                text.push('{');
                rest = &rest[1..];
            }
        } else {
            text.push(ch);
            rest = &rest[ch.len_utf8()..];
        }
    }
    if !text.is_empty() {
        pieces.push(Piece::Text(text));
    }
    pieces
}

/// Placeholder bindings for one render.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings(BTreeMap<String, String>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: impl Into<String>) -> Self {
        self.0.insert(name.to_string(), value.into());
        self
    }
}

/// The full set of stage templates.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<TemplateName, PromptTemplate>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let templates = TemplateName::ALL
            .into_iter()
            .map(|t| {
                let tpl = PromptTemplate::new(t.file_stem(), t.builtin_body())
                    .expect("builtin templates are well formed");
                (t, tpl)
            })
            .collect();
        Self { templates }
    }

    /// Built-in templates, overridden by any `<stem>.txt` present in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, TemplateError> {
        let mut set = Self::builtin();
        for t in TemplateName::ALL {
            let path = dir.join(format!("{}.txt", t.file_stem()));
            if path.is_file() {
                let body = std::fs::read_to_string(&path).map_err(|e| TemplateError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                set.templates
                    .insert(t, PromptTemplate::new(t.file_stem(), &body)?);
            }
        }
        Ok(set)
    }

    pub fn get(&self, name: TemplateName) -> &PromptTemplate {
        &self.templates[&name]
    }

    pub fn render(&self, name: TemplateName, bindings: &Bindings) -> Result<String, TemplateError> {
        self.get(name).render(bindings)
    }

    /// Template stem to content version, for report provenance.
    pub fn versions(&self) -> BTreeMap<String, String> {
        self.templates
            .iter()
            .map(|(k, v)| (k.file_stem().to_string(), v.version()))
            .collect()
    }
}

/// Comma-separated list, as used inline in prompts.
pub fn comma_list<S: AsRef<str>>(items: &[S]) -> String {
    items
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(", ")
}

/// One item per line, numbered from 1.
pub fn numbered_list<S: AsRef<str>>(items: &[S]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}", i + 1, s.as_ref()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parent headings followed by their children, blank-line separated.
pub fn tree_listing(groups: &[(String, Vec<String>)]) -> String {
    let mut blocks = Vec::new();
    for (parent, children) in groups {
        blocks.push(format!("- {parent}:"));
        blocks.extend(children.iter().cloned());
    }
    blocks.join("\n\n")
}

/// One requested comparison matrix: the node it belongs to and the items compared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRequest {
    pub node: String,
    pub labels: Vec<String>,
}

/// What a prompt asks for, in structured form. Scripted responders answer
/// from this instead of reading prompt text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Intent {
    Freeform,
    AdviseExperts {
        goal: String,
    },
    AdviseLevels {
        goal: String,
    },
    Personas {
        count: usize,
    },
    ProposeCriteria {
        goal: String,
        count: usize,
    },
    ProposeSubcriteria {
        parents: Vec<String>,
        count: usize,
    },
    ProposeAlternatives {
        goal: String,
        count: usize,
    },
    Ballot {
        items: Vec<String>,
        parent: Option<String>,
    },
    Matrices {
        requests: Vec<MatrixRequest>,
    },
    Repair {
        violations: Vec<String>,
        original: Box<Intent>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    pub intent: Intent,
}

impl Prompt {
    pub fn freeform(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            intent: Intent::Freeform,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOAL: &str = "Secure the Corporate Datacenter from Social Engineering Attacks";

    #[test]
    fn criteria_prompt_carries_goal_and_count() {
        let set = TemplateSet::builtin();
        let text = set
            .render(
                TemplateName::Criteria,
                &Bindings::new().with("goal", GOAL).with("n", "7"),
            )
            .unwrap();
        assert!(text.contains(
            "First, come up with 7 top-level criteria. Use 3 words max for each criteria."
        ));
        assert!(text.contains(&format!("top goal: \"{GOAL}\"")));
        assert!(!text.contains('{'));
    }

    #[test]
    fn placeholder_free_body_is_unchanged() {
        let set = TemplateSet::builtin();
        let t = set.get(TemplateName::AdviseLevels);
        assert!(t.placeholders().is_empty());
        assert_eq!(t.render(&Bindings::new()).unwrap(), t.body());
    }

    #[test]
    fn missing_binding_names_the_placeholder() {
        let set = TemplateSet::builtin();
        let err = set
            .render(TemplateName::Criteria, &Bindings::new().with("n", "7"))
            .unwrap_err();
        assert_eq!(
            err,
            TemplateError::UnboundPlaceholder {
                template: "criteria".into(),
                name: "goal".into()
            }
        );
    }

    #[test]
    fn unused_binding_is_rejected() {
        let t = PromptTemplate::new("t", "hi {goal}").unwrap();
        let err = t
            .render(&Bindings::new().with("goal", "g").with("parent", "p"))
            .unwrap_err();
        assert!(matches!(err, TemplateError::UnknownBinding { name, .. } if name == "parent"));
    }

    #[test]
    fn escapes_and_stray_braces() {
        let t = PromptTemplate::new("t", "{{goal}} {goal} { x } {Goal}").unwrap();
        assert_eq!(
            t.placeholders().into_iter().collect::<Vec<_>>(),
            vec!["goal"]
        );
        assert_eq!(
            t.render(&Bindings::new().with("goal", "G")).unwrap(),
            "{goal} G { x } {Goal}"
        );
        assert!(matches!(
            PromptTemplate::new("t", "{oops}"),
            Err(TemplateError::UnknownPlaceholder { .. })
        ));
    }

    #[test]
    fn every_builtin_renders_with_its_own_placeholders() {
        let set = TemplateSet::builtin();
        for name in TemplateName::ALL {
            let t = set.get(name);
            let b = t
                .placeholders()
                .into_iter()
                .fold(Bindings::new(), |b, p| b.with(p, "X"));
            assert!(t.render(&b).is_ok(), "{name}");
            assert_eq!(name.file_stem().parse::<TemplateName>().unwrap(), name);
        }
        assert_eq!(set.versions().len(), 14);
    }

    #[test]
    fn directory_overrides_replace_single_templates() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("repair.txt"), "Fix: {items}").unwrap();
        let set = TemplateSet::with_overrides(dir.path()).unwrap();
        assert_eq!(set.get(TemplateName::Repair).body(), "Fix: {items}");
        assert_eq!(
            set.get(TemplateName::Criteria).body(),
            TemplateSet::builtin().get(TemplateName::Criteria).body()
        );
        assert_ne!(
            set.versions()["repair"],
            TemplateSet::builtin().versions()["repair"]
        );
    }

    #[test]
    fn listings() {
        assert_eq!(numbered_list(&["A", "B"]), "1. A\n2. B");
        assert_eq!(comma_list(&["A", "B"]), "A, B");
        let tree = tree_listing(&[("P".into(), vec!["a".into(), "b".into()])]);
        assert_eq!(tree, "- P:\n\na\n\nb");
    }
}
