//! Builds the committed case-study fixture directory: a scripted run is
//! recorded, its expert token counts are apportioned to the published
//! per-expert total, and the result is replayed into the final session.

use std::collections::BTreeMap;
use std::path::Path;

use ahp_core::csv_format::write_matrix;
use ahp_core::PairwiseMatrix;
use ahp_experts::backend::{
    transcript_from_conversations, ReplayBackend, ScriptedBackend, TranscriptEntry,
};
use ahp_experts::persona::GUIDE_ID;
use ahp_experts::{BackendKind, TemplateSet};
use serde_json::json;

use super::data::{self, GOAL, TOKENS_PER_EXPERT, TOP_MATRIX, TREE};
use super::{synth, CaseStudyScript};
use crate::config::{PipelineConfig, ResponderKind};
use crate::error::PipelineError;
use crate::runner::{leaf_key, Runner};
use crate::session::SessionState;

pub const TRANSCRIPT_FILE: &str = "transcript.json";

/// File name to contents, for every file of the fixture directory.
pub type Bundle = BTreeMap<&'static str, String>;

/// Replay configuration stored in the fixture directory.
pub fn replay_config() -> PipelineConfig {
    let mut c = super::config();
    c.backend.kind = BackendKind::Replay;
    c.backend.transcript = Some(TRANSCRIPT_FILE.into());
    c
}

fn run_to_end(
    config: PipelineConfig,
    backend: &dyn ahp_experts::ExpertBackend,
) -> Result<SessionState, PipelineError> {
    let templates = TemplateSet::builtin();
    let mut session = SessionState::new(config, ".", templates.versions());
    Runner::new(backend, templates, Path::new(".")).run(&mut session, None, |_| Ok(()))?;
    Ok(session)
}

/// Scales `counts` to sum to `total`, keeping proportions; remainders go
/// to the largest fractional parts, ties to the earliest.
pub fn apportion(counts: &[u32], total: u32) -> Vec<u32> {
    let sum: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    assert!(sum > 0, "nothing to apportion");
    let exact: Vec<(u64, u64)> = counts
        .iter()
        .map(|&c| {
            (
                u64::from(c) * u64::from(total) / sum,
                u64::from(c) * u64::from(total) % sum,
            )
        })
        .collect();
    let mut out: Vec<u32> = exact.iter().map(|(q, _)| *q as u32).collect();
    let short = total - out.iter().sum::<u32>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| exact[b].1.cmp(&exact[a].1).then(a.cmp(&b)));
    for &i in order.iter().take(short as usize) {
        out[i] += 1;
    }
    out
}

/// Rewrites every expert's token counts so they total `per_expert`; the
/// guide keeps its estimates.
pub fn rescale_experts(entries: &mut [TranscriptEntry], per_expert: u32) {
    let mut by_persona: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        if e.persona != GUIDE_ID {
            by_persona.entry(e.persona.clone()).or_default().push(i);
        }
    }
    for idx in by_persona.values() {
        let counts: Vec<u32> = idx
            .iter()
            .flat_map(|&i| {
                [
                    entries[i].token_counts.prompt,
                    entries[i].token_counts.reply,
                ]
            })
            .collect();
        let scaled = apportion(&counts, per_expert);
        for (k, &i) in idx.iter().enumerate() {
            entries[i].token_counts.prompt = scaled[2 * k];
            entries[i].token_counts.reply = scaled[2 * k + 1];
        }
    }
}

fn matrix_csv(m: &PairwiseMatrix, corner: &str) -> String {
    write_matrix(m, corner)
}

pub fn build() -> Result<Bundle, PipelineError> {
    let mut scripted_config = super::config();
    scripted_config.backend.responder = ResponderKind::CaseStudy;
    let script = CaseStudyScript::new();
    let scripted = ScriptedBackend::from_rules(Vec::new())
        .with_responder(std::sync::Arc::new(CaseStudyScript::new()));
    let recorded = run_to_end(scripted_config, &scripted)?;

    let mut transcript =
        transcript_from_conversations(recorded.conversations.values().flat_map(|l| l.all()));
    rescale_experts(&mut transcript, TOKENS_PER_EXPERT);
    let replay = ReplayBackend::new(transcript.clone())?;
    let session = run_to_end(replay_config(), &replay)?;
    if session.artifacts != recorded.artifacts
        || session.report.as_ref().map(|r| &r.tree) != recorded.report.as_ref().map(|r| &r.tree)
    {
        return Err(PipelineError::Session(
            "replayed fixture run diverged from the recording".into(),
        ));
    }

    let mut files = Bundle::new();
    files.insert("config.toml", replay_config().to_toml());
    files.insert(
        TRANSCRIPT_FILE,
        serde_json::to_string_pretty(&transcript).expect("transcript serializes") + "\n",
    );
    files.insert("session.json", session.to_json());
    let report = session
        .report
        .as_ref()
        .ok_or(PipelineError::MissingArtifact("report"))?;
    files.insert("report.json", report.to_json());
    files.insert("report.md", report.to_markdown());
    files.insert(
        "personas.json",
        serde_json::to_string_pretty(&super::personas()).expect("personas serialize") + "\n",
    );
    let rows: Vec<Vec<f64>> = TOP_MATRIX.iter().map(|r| r.to_vec()).collect();
    let top =
        PairwiseMatrix::from_rows(data::top_labels(), rows).expect("published matrix is square");
    files.insert("top_matrix.csv", matrix_csv(&top, GOAL));
    let se = &script.matrices().sub[TREE[0].0];
    let chen = data::PERSONAS
        .iter()
        .position(|p| p.name == data::EXPERT_SUB_MATRIX_OWNER)
        .expect("owner is on the panel");
    files.insert("expert_sub_matrix.csv", matrix_csv(&se[chen], TREE[0].0));
    let leaves: Vec<_> = TREE
        .iter()
        .flat_map(|(p, kids)| kids.iter().map(move |k| (*p, *k)))
        .zip(synth::leaf_vectors())
        .zip(synth::FAVORED)
        .map(|(((p, k), v), fav)| json!({ "leaf": leaf_key(p, k), "favored": data::ALTERNATIVES[fav], "priorities": v }))
        .collect();
    files.insert(
        "leaf_alternatives.json",
        serde_json::to_string_pretty(&json!({
            "synthesized": true,
            "alternatives": data::ALTERNATIVES,
            "leaves": leaves,
        }))
        .expect("json serializes")
            + "\n",
    );
    files.insert("PROVENANCE.md", PROVENANCE.to_string());
    Ok(files)
}

/// Writes `bundle` into `dir`, creating it if needed.
pub fn write(bundle: &Bundle, dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    for (name, text) in bundle {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))?;
    }
    Ok(())
}

const PROVENANCE: &str = "\
# Fixture provenance

Published, used verbatim:

- goal, guide replies, the seven persona profiles
- each expert's seven proposed top-level criteria
- the final tree and the five final alternatives
- the aggregated top-level matrix (`top_matrix.csv`) with its priorities, CI and CR
- one expert's sub-criteria matrix for Social Engineering Awareness (`expert_sub_matrix.csv`)
- the 21 leaf global priorities, the final scores and the ranking
- the blended price and the per-expert token total

Synthesized (nothing was published for these):

- individual expert matrices: each cell's seven scale values are fitted so their
  geometric mean lands within 0.0005 of the published or implied aggregate,
  falling back to the nearest attainable mean
- per-leaf alternative priorities (`leaf_alternatives.json`), chosen so their
  weighted sum under the published leaf globals equals the published final scores
- ballots, the non-final sub-criteria and the thirty non-final alternatives
- one reciprocity slip in an expert's first top-level reply, repaired on request
- per-exchange token counts: real estimates, proportionally rescaled so each
  expert totals the published per-expert figure

Regenerate with `cargo run -p ahp-pipeline --example build_case_study_fixture`.
";
