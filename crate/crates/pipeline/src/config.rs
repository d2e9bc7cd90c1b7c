//! Pipeline configuration, read from TOML. Unknown keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ahp_core::elicitation::AliasTable;
use ahp_core::Aggregation;
use ahp_experts::backend::{BackendKind, LiveConfig};
use ahp_experts::conversation::{DEFAULT_CONTEXT_BUDGET, DEFAULT_ROTATE_FRACTION};
use ahp_experts::{ContextBudget, Pricing};
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub decision: DecisionConfig,
    #[serde(default)]
    pub panel: PanelConfig,
    #[serde(default)]
    pub hierarchy: HierarchyConfig,
    #[serde(default)]
    pub judgment: JudgmentConfig,
    #[serde(default)]
    pub elicitation: ElicitationConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub context: ContextConfig,
    #[serde(default = "default_pricing")]
    pub pricing: Pricing,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionConfig {
    pub goal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PanelConfig {
    /// Panel size E.
    pub experts: usize,
    /// Ask the guide persona for panel size and depth advice first.
    pub advise: bool,
    /// JSON list of personas; when set, the guide is not asked for personas.
    pub personas_file: Option<String>,
}

impl Default for PanelConfig {
    fn default() -> Self {
        Self {
            experts: 7,
            advise: true,
            personas_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HierarchyConfig {
    /// Criteria levels below the goal. Only 2 is supported.
    pub levels: u32,
    pub top_criteria: usize,
    pub sub_per_criterion: usize,
    pub candidate_alternatives_per_expert: usize,
    pub final_alternatives: usize,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            levels: 2,
            top_criteria: 7,
            sub_per_criterion: 3,
            candidate_alternatives_per_expert: 5,
            final_alternatives: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JudgmentConfig {
    pub aggregation: Aggregation,
    pub cr_threshold: f64,
    /// Abort instead of flagging when an aggregate is inconsistent.
    pub strict_consistency: bool,
    /// Matrices requested per message.
    pub matrix_batch: usize,
}

impl Default for JudgmentConfig {
    fn default() -> Self {
        Self {
            aggregation: Aggregation::Geometric,
            cr_threshold: ahp_core::CONSISTENCY_THRESHOLD,
            strict_consistency: false,
            matrix_batch: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElicitationConfig {
    /// Word limit for criteria and sub-criteria names.
    pub max_words: usize,
    /// Word limit for alternative names.
    pub alternative_max_words: usize,
    pub max_repairs: u32,
    /// Alias label to the label it merges into.
    pub aliases: BTreeMap<String, String>,
}

impl Default for ElicitationConfig {
    fn default() -> Self {
        Self {
            max_words: 3,
            alternative_max_words: 6,
            max_repairs: 2,
            aliases: BTreeMap::new(),
        }
    }
}

/// Scripted backends answer from a rule file and then from a built-in responder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponderKind {
    #[default]
    Synthetic,
    CaseStudy,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub responder: ResponderKind,
    /// Scripted: JSON rule file.
    pub script: Option<String>,
    /// Replay: JSON transcript.
    pub transcript: Option<String>,
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub min_interval_ms: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        let live = LiveConfig::default();
        Self {
            kind: BackendKind::Scripted,
            responder: ResponderKind::default(),
            script: None,
            transcript: None,
            endpoint: live.endpoint,
            model: live.model,
            api_key_env: live.api_key_env,
            timeout_secs: live.timeout_secs,
            max_retries: live.max_retries,
            initial_backoff_ms: live.initial_backoff_ms,
            min_interval_ms: live.min_interval_ms,
        }
    }
}

impl BackendConfig {
    pub fn live(&self) -> LiveConfig {
        LiveConfig {
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            api_key_env: self.api_key_env.clone(),
            timeout_secs: self.timeout_secs,
            max_retries: self.max_retries,
            initial_backoff_ms: self.initial_backoff_ms,
            min_interval_ms: self.min_interval_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContextConfig {
    pub max_tokens: u32,
    pub rotate_fraction: f64,
}

impl Default for ContextConfig {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_CONTEXT_BUDGET,
            rotate_fraction: DEFAULT_ROTATE_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Experts elicited concurrently.
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { parallelism: 4 }
    }
}

fn default_pricing() -> Pricing {
    Pricing::blended(0.10)
}

impl PipelineConfig {
    pub fn with_goal(goal: &str) -> Self {
        Self {
            decision: DecisionConfig {
                goal: goal.to_string(),
            },
            panel: PanelConfig::default(),
            hierarchy: HierarchyConfig::default(),
            judgment: JudgmentConfig::default(),
            elicitation: ElicitationConfig::default(),
            backend: BackendConfig::default(),
            context: ContextConfig::default(),
            pricing: default_pricing(),
            run: RunConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let config: Self =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            PipelineError::Config(m) => PipelineError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if self.decision.goal.trim().is_empty() {
            return fail("decision.goal is empty".into());
        }
        if self.panel.experts < 2 {
            return fail(format!(
                "panel.experts must be at least 2, got {}",
                self.panel.experts
            ));
        }
        if self.hierarchy.levels != 2 {
            return fail(format!(
                "hierarchy.levels must be 2, got {}",
                self.hierarchy.levels
            ));
        }
        let h = &self.hierarchy;
        for (name, v) in [
            ("hierarchy.top_criteria", h.top_criteria),
            ("hierarchy.sub_per_criterion", h.sub_per_criterion),
            (
                "hierarchy.candidate_alternatives_per_expert",
                h.candidate_alternatives_per_expert,
            ),
            ("hierarchy.final_alternatives", h.final_alternatives),
        ] {
            if v < 2 {
                return fail(format!("{name} must be at least 2, got {v}"));
            }
            if v > 10 && name != "hierarchy.candidate_alternatives_per_expert" {
                return fail(format!(
                    "{name} must be at most 10 (largest tabulated random index), got {v}"
                ));
            }
        }
        let t = self.judgment.cr_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return fail(format!("judgment.cr_threshold must be in (0, 1], got {t}"));
        }
        if self.judgment.matrix_batch == 0 {
            return fail("judgment.matrix_batch must be at least 1".into());
        }
        if self.elicitation.max_words == 0 || self.elicitation.alternative_max_words == 0 {
            return fail("word limits must be at least 1".into());
        }
        if self.run.parallelism == 0 {
            return fail("run.parallelism must be at least 1".into());
        }
        if !(self.context.rotate_fraction > 0.0 && self.context.rotate_fraction <= 1.0) {
            return fail("context.rotate_fraction must be in (0, 1]".into());
        }
        self.alias_table()?;
        Ok(())
    }

    pub fn alias_table(&self) -> Result<AliasTable, PipelineError> {
        AliasTable::from_pairs(
            self.elicitation
                .aliases
                .iter()
                .map(|(a, t)| (a.as_str(), t.as_str())),
        )
        .map_err(|e| PipelineError::Config(format!("elicitation.aliases: {e}")))
    }

    pub fn budget(&self) -> ContextBudget {
        ContextBudget {
            max_tokens: self.context.max_tokens,
            rotate_fraction: self.context.rotate_fraction,
        }
    }

    /// Resolves a configured path against `base`.
    pub fn resolve(base: &Path, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = PipelineConfig::from_toml("[decision]\ngoal = \"Pick a vendor\"\n").unwrap();
        assert_eq!(c.panel.experts, 7);
        assert_eq!(c.hierarchy.top_criteria, 7);
        assert_eq!(c.hierarchy.sub_per_criterion, 3);
        assert_eq!(c.judgment.aggregation, Aggregation::Geometric);
        assert_eq!(c.judgment.cr_threshold, 0.1);
        assert_eq!(c.backend.kind, BackendKind::Scripted);
        assert_eq!(c.pricing.blended_per_1k, Some(0.10));
        assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = PipelineConfig::from_toml("[decision]\ngoal = \"g\"\n[panel]\nexpert = 5\n")
            .unwrap_err();
        assert!(err.to_string().contains("expert"), "{err}");
    }

    #[test]
    fn invariants() {
        let bad = |extra: &str| {
            PipelineConfig::from_toml(&format!("[decision]\ngoal = \"g\"\n{extra}")).is_err()
        };
        assert!(bad("[panel]\nexperts = 1\n"));
        assert!(bad("[hierarchy]\nlevels = 3\n"));
        assert!(bad("[hierarchy]\ntop_criteria = 1\n"));
        assert!(bad("[judgment]\ncr_threshold = 0.0\n"));
        assert!(bad("[judgment]\ncr_threshold = 1.5\n"));
        assert!(!bad("[judgment]\ncr_threshold = 1.0\n"));
        assert!(bad("[elicitation.aliases]\n\" \" = \"a\"\n"));
        assert!(PipelineConfig::from_toml("[decision]\ngoal = \"  \"\n").is_err());
    }
}
