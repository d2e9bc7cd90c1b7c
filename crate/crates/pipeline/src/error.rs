use ahp_core::elicitation::ElicitationError;
use ahp_core::{HierarchyError, MathError};
use ahp_experts::cost::CostError;
use ahp_experts::prompt::TemplateError;
use ahp_experts::{BackendError, ElicitError};

use crate::session::Stage;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("stage {stage}: expert {persona}: {source}")]
    Elicit {
        stage: Stage,
        persona: String,
        #[source]
        source: ElicitError,
    },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("matrix {node}: {source}")]
    Math {
        node: String,
        #[source]
        source: MathError,
    },
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("stage {stage}: {source}")]
    Elicitation {
        stage: Stage,
        #[source]
        source: ElicitationError,
    },
    #[error("expert panel: {0}")]
    Panel(String),
    #[error("strict consistency: aggregate matrices at or above the CR threshold: {}", .0.join(", "))]
    Inconsistent(Vec<String>),
    #[error("session has no {0}; run the earlier stages first")]
    MissingArtifact(&'static str),
    #[error("session file: {0}")]
    Session(String),
    #[error(
        "session schema version {found} is not supported (this build reads version {supported})"
    )]
    SchemaVersion { found: u32, supported: u32 },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Coarse classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input data, configuration or session files.
    Data,
    /// Model transport, replay or credential failures, and replies that
    /// stayed malformed after repair.
    Backend,
}

impl PipelineError {
    pub fn class(&self) -> ErrorClass {
        match self {
            Self::Backend(_) | Self::Elicit { .. } => ErrorClass::Backend,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
