use std::path::{Path, PathBuf};

use ahp_core::csv_format::read_matrix;
use ahp_core::hierarchy::{export_tree, validate_tree, ExportFormat};
use ahp_core::{consistency_with_threshold, PairwiseMatrix, DEFAULT_RECIPROCITY_TOLERANCE};
use ahp_experts::cost::{format_cents, CostReport};
use ahp_experts::{BackendKind, Pricing, TemplateSet};
use ahp_pipeline::report::cost_with_pricing;
use ahp_pipeline::{
    build_backend, synthesize, DecisionReport, ErrorClass, PipelineConfig, PipelineError, Runner,
    SessionState,
};
use serde_json::{json, Value};

use crate::args::{
    BackendChoice, Command, ComputeArgs, CostArgs, ExportArgs, Overrides, ReportArgs, ResumeArgs,
    RunArgs, TreeFormat, ValidateArgs,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Backend(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Data(_) => "data",
            Self::Backend(_) => "backend",
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e.class() {
            ErrorClass::Backend => Self::Backend(e.to_string()),
            ErrorClass::Data => Self::Data(e.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Where text goes: in JSON mode standard output carries only JSON.
pub struct Output {
    pub json: bool,
}

impl Output {
    fn human(&self, text: &str) {
        if self.json {
            self.note(text);
        } else {
            emit(&mut std::io::stdout().lock(), text);
        }
    }

    /// Progress notes always go to standard error.
    fn note(&self, text: &str) {
        emit(&mut std::io::stderr().lock(), text);
    }

    pub fn json(&self, value: &Value) {
        if self.json {
            emit(
                &mut std::io::stdout().lock(),
                &serde_json::to_string_pretty(value).expect("json values serialize"),
            );
        }
    }
}

/// A closed pipe (say, output piped into `head`) is not an error worth a
/// panic; the text is simply dropped.
pub fn emit(w: &mut impl std::io::Write, text: &str) {
    let _ = writeln!(w, "{text}");
}

pub fn dispatch(command: Command, out: &Output) -> CliResult {
    match command {
        Command::Run(a) => run(a, out),
        Command::Resume(a) => resume(a, out),
        Command::Compute(a) => compute(a, out),
        Command::Validate(a) => validate(a, out),
        Command::Report(a) => report(a, out),
        Command::EstimateCost(a) => estimate_cost(a, out),
        Command::ExportTree(a) => export(a, out),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))
}

fn apply(config: &mut PipelineConfig, o: &Overrides) -> CliResult {
    if let Some(b) = o.backend {
        config.backend.kind = match b {
            BackendChoice::Live => BackendKind::Live,
            BackendChoice::Replay => BackendKind::Replay,
            BackendChoice::Scripted => BackendKind::Scripted,
        };
    }
    if o.strict_consistency {
        config.judgment.strict_consistency = true;
    }
    if let Some(p) = o.parallelism {
        config.run.parallelism = p;
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn absolute(path: &Path) -> Result<PathBuf, CliError> {
    std::path::absolute(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_reports(report: &DecisionReport, dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("creating {}: {e}", dir.display())))?;
    for (name, text) in [
        ("report.json", report.to_json()),
        ("report.md", report.to_markdown()),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, text)
            .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))?;
    }
    Ok(())
}

fn summary(report: &DecisionReport) -> String {
    let best = &report.best_alternative;
    let score = report.alternative_scores.score_of(best).unwrap_or(0.0);
    format!(
        "Best alternative: {best} ({score:.4}). Flagged matrices: {}. Cost: {} (about ${}).",
        report.flags.len(),
        format_cents(report.cost.total_cents),
        report.cost.headline_dollars
    )
}

/// Drives `session` to the end, checkpointing to `path` after every stage.
fn drive(session: &mut SessionState, path: &Path, base: &Path, out: &Output) -> CliResult {
    let backend = build_backend(&session.config, base)?;
    let templates = TemplateSet::builtin();
    let runner = Runner::new(backend.as_ref(), templates, base);
    runner.run(session, None, |s| {
        s.save(path)?;
        if s.failures.is_empty() || s.stage != s.failures.last().map(|f| f.stage).unwrap_or(s.stage)
        {
            out.note(&format!("checkpoint: next stage {}", s.stage));
        }
        Ok(())
    })?;
    Ok(())
}

fn finish(session: &SessionState, dir: &Path, out: &Output) -> CliResult {
    let report = session
        .report
        .as_ref()
        .ok_or_else(|| CliError::Data("session finished without a report".into()))?;
    write_reports(report, dir)?;
    out.human(&summary(report));
    out.json(&serde_json::to_value(report).expect("report serializes"));
    Ok(())
}

fn run(a: RunArgs, out: &Output) -> CliResult {
    let mut config = PipelineConfig::load(&a.config)?;
    apply(&mut config, &a.overrides)?;
    let base = absolute(
        a.config
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new(".")),
    )?;
    let session_path = a
        .session
        .clone()
        .unwrap_or_else(|| a.out.join("session.json"));
    if session_path.exists() {
        return Err(CliError::Usage(format!(
            "{} already exists; use `ahp resume --session {}` to continue it",
            session_path.display(),
            session_path.display()
        )));
    }
    // Fail on a missing credential or transcript before anything is written.
    build_backend(&config, &base)?;
    std::fs::create_dir_all(&a.out)
        .map_err(|e| CliError::Data(format!("creating {}: {e}", a.out.display())))?;
    let mut session = SessionState::new(
        config,
        &base.to_string_lossy(),
        TemplateSet::builtin().versions(),
    );
    session.save(&session_path)?;
    drive(&mut session, &session_path, &base, out)?;
    finish(&session, &a.out, out)
}

fn resume(a: ResumeArgs, out: &Output) -> CliResult {
    let mut session = SessionState::load(&a.session)?;
    let dir = a.out.clone().unwrap_or_else(|| {
        a.session
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf()
    });
    if session.is_done() {
        out.note("session is complete; re-emitting its report");
        return finish(&session, &dir, out);
    }
    let mut config = session.config.clone();
    apply(&mut config, &a.overrides)?;
    let base = session.resolved_base(Some(&a.session));
    build_backend(&config, &base)?;
    if config != session.config {
        session.config = config;
        session.save(&a.session)?;
    }
    drive(&mut session, &a.session, &base, out)?;
    finish(&session, &dir, out)
}

fn load_matrix(path: &Path) -> Result<PairwiseMatrix, CliError> {
    read_matrix::<f64>(&read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn compute(a: ComputeArgs, out: &Output) -> CliResult {
    if !(a.threshold > 0.0 && a.threshold <= 1.0) {
        return Err(CliError::Usage(format!(
            "--threshold must be in (0, 1], got {}",
            a.threshold
        )));
    }
    let m = load_matrix(&a.matrix)?;
    let check = m.validate(DEFAULT_RECIPROCITY_TOLERANCE);
    if !check.is_ok() {
        let lines: Vec<String> = check.violations.iter().map(ToString::to_string).collect();
        return Err(CliError::Data(format!(
            "{}: {}",
            a.matrix.display(),
            lines.join("; ")
        )));
    }
    let (w, c) =
        consistency_with_threshold(&m, a.threshold).map_err(|e| CliError::Data(e.to_string()))?;
    let mut text = String::from("Priorities:\n");
    for (label, weight) in w.labels.iter().zip(&w.weights) {
        text.push_str(&format!("  {label}: {weight:.3}\n"));
    }
    text.push_str(&format!(
        "Lambda max: {:.3}\nCI: {:.3}\nRI: {:.2}\nCR: {:.3}\nVerdict: {} (threshold {})",
        c.lambda_max,
        c.ci,
        c.ri,
        c.cr,
        if c.consistent {
            "consistent"
        } else {
            "inconsistent"
        },
        a.threshold
    ));
    out.human(&text);
    out.json(&json!({ "priorities": w, "consistency": c, "threshold": a.threshold }));
    Ok(())
}

fn validate(a: ValidateArgs, out: &Output) -> CliResult {
    if a.config.is_none() && a.session.is_none() && a.matrices.is_empty() {
        return Err(CliError::Usage(
            "nothing to validate: give --config, --session or matrix files".into(),
        ));
    }
    let mut results = Vec::new();
    if let Some(path) = &a.config {
        let problems = match PipelineConfig::load(path) {
            Ok(_) => Vec::new(),
            Err(e) => vec![e.to_string()],
        };
        results.push(("config", path.clone(), problems));
    }
    if let Some(path) = &a.session {
        results.push(("session", path.clone(), session_problems(path)));
    }
    for path in &a.matrices {
        let problems = match load_matrix(path) {
            Ok(m) => m
                .validate(DEFAULT_RECIPROCITY_TOLERANCE)
                .violations
                .iter()
                .map(ToString::to_string)
                .collect(),
            Err(e) => vec![e.to_string()],
        };
        results.push(("matrix", path.clone(), problems));
    }
    for (what, path, problems) in &results {
        if problems.is_empty() {
            out.human(&format!("ok: {what} {}", path.display()));
        }
        for p in problems {
            out.human(&format!("invalid: {what} {}: {p}", path.display()));
        }
    }
    out.json(&json!({
        "valid": results.iter().all(|r| r.2.is_empty()),
        "files": results
            .iter()
            .map(|(what, path, problems)| json!({ "kind": what, "path": path, "problems": problems }))
            .collect::<Vec<_>>(),
    }));
    let bad = results.iter().filter(|r| !r.2.is_empty()).count();
    if bad > 0 {
        return Err(CliError::Data(format!("{bad} file(s) failed validation")));
    }
    Ok(())
}

fn session_problems(path: &Path) -> Vec<String> {
    let session = match SessionState::load(path) {
        Ok(s) => s,
        Err(e) => return vec![e.to_string()],
    };
    let mut problems = Vec::new();
    if let Err(e) = session.config.validate() {
        problems.push(e.to_string());
    }
    if let Some(stored) = &session.report {
        match synthesize(&session) {
            Ok(fresh) if fresh == *stored => {}
            Ok(_) => {
                problems.push("stored report differs from one synthesized from the session".into())
            }
            Err(e) => problems.push(format!("report cannot be rebuilt: {e}")),
        }
        problems.extend(
            validate_tree(&stored.tree, None)
                .violations
                .iter()
                .map(ToString::to_string),
        );
    }
    if let Some(aggs) = &session.artifacts.aggregates {
        let threshold = session.config.judgment.cr_threshold;
        for a in aggs {
            if (a.consistency.cr >= threshold) != a.flagged {
                problems.push(format!(
                    "aggregate for {} has CR {} but flag {}",
                    a.node, a.consistency.cr, a.flagged
                ));
            }
        }
    }
    problems
}

/// The stored report, or one synthesized on the fly when aggregation is done.
fn session_report(path: &Path) -> Result<DecisionReport, CliError> {
    let session = SessionState::load(path)?;
    match &session.report {
        Some(r) => Ok(r.clone()),
        None if session.artifacts.aggregates.is_some() => Ok(synthesize(&session)?),
        None => Err(CliError::Data(format!(
            "{} has no report yet (next stage: {}); resume it first",
            path.display(),
            session.stage
        ))),
    }
}

fn report(a: ReportArgs, out: &Output) -> CliResult {
    let report = session_report(&a.session)?;
    if let Some(dir) = &a.out {
        write_reports(&report, dir)?;
    }
    out.human(report.to_markdown().trim_end());
    out.json(&serde_json::to_value(&report).expect("report serializes"));
    Ok(())
}

fn cost_text(cost: &CostReport) -> String {
    let mut text = String::from("Persona | Role | Tokens | Cost\n");
    for p in &cost.per_persona {
        let role = match p.role {
            ahp_experts::Role::Guide => "guide",
            ahp_experts::Role::Expert => "expert",
        };
        text.push_str(&format!(
            "{} | {role} | {} | {}\n",
            p.persona,
            p.tokens,
            format_cents(p.cents)
        ));
    }
    text.push_str(&format!(
        "Panel: {}. Guide: {}. Total: {} (about ${}).\nRounding: {}.",
        format_cents(cost.panel_cents),
        format_cents(cost.guide_cents),
        format_cents(cost.total_cents),
        cost.headline_dollars,
        cost.rounding_rule
    ));
    text
}

fn estimate_cost(a: CostArgs, out: &Output) -> CliResult {
    let session = SessionState::load(&a.session)?;
    let pricing = match (a.blended, a.input, a.output) {
        (Some(b), _, _) => Pricing::blended(b),
        (None, Some(i), Some(o)) => Pricing {
            input_per_1k: Some(i),
            output_per_1k: Some(o),
            blended_per_1k: None,
        },
        _ => session.config.pricing,
    };
    let cost = cost_with_pricing(&session, &pricing).map_err(|e| match e {
        PipelineError::Cost(c) => CliError::Usage(c.to_string()),
        other => other.into(),
    })?;
    out.human(&cost_text(&cost));
    out.json(&serde_json::to_value(&cost).expect("cost serializes"));
    Ok(())
}

fn export(a: ExportArgs, out: &Output) -> CliResult {
    let report = session_report(&a.session)?;
    let (format, name) = match a.format {
        TreeFormat::Outline => (ExportFormat::TextOutline, "outline"),
        TreeFormat::Graph => (ExportFormat::GraphDescription, "graph"),
    };
    let text = export_tree(&report.tree, format);
    out.human(text.trim_end());
    out.json(&json!({ "format": name, "text": text, "tree": report.tree }));
    Ok(())
}
