//! Builds the configured expert backend.

use std::path::Path;
use std::sync::Arc;

use ahp_experts::backend::{LiveBackend, ReplayBackend, ScriptedBackend, SyntheticExpert};
use ahp_experts::{BackendError, BackendKind, ExpertBackend};

use crate::config::{PipelineConfig, ResponderKind};
use crate::error::PipelineError;
use crate::fixture::CaseStudyScript;

/// Relative script and transcript paths resolve against `base_dir`. A live
/// backend without its credential fails here, before anything is written.
pub fn build_backend(
    config: &PipelineConfig,
    base_dir: &Path,
) -> Result<Box<dyn ExpertBackend>, PipelineError> {
    let b = &config.backend;
    Ok(match b.kind {
        BackendKind::Live => Box::new(LiveBackend::new(b.live())?),
        BackendKind::Replay => {
            let file = b.transcript.as_deref().ok_or_else(|| {
                BackendError::Config("replay backend needs backend.transcript".into())
            })?;
            Box::new(ReplayBackend::from_file(&PipelineConfig::resolve(
                base_dir, file,
            ))?)
        }
        BackendKind::Scripted => {
            let rules = match b.script.as_deref() {
                Some(file) => {
                    ScriptedBackend::load_rules(&PipelineConfig::resolve(base_dir, file))?
                }
                None => Vec::new(),
            };
            let backend = ScriptedBackend::from_rules(rules);
            Box::new(match b.responder {
                ResponderKind::Synthetic => backend.with_responder(Arc::new(SyntheticExpert)),
                ResponderKind::CaseStudy => {
                    backend.with_responder(Arc::new(CaseStudyScript::new()))
                }
                ResponderKind::None => backend,
            })
        }
    })
}
