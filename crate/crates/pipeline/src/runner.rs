//! Stage execution. Each stage works on a copy of the session and replaces
//! the original only when it completes, so a failed stage leaves the
//! session exactly as it was (apart from the failure record).

use std::path::{Path, PathBuf};

use ahp_core::elicitation::{dedupe, select_top_n, tally, CandidatePool, PoolStage, ScoreBallot};
use ahp_core::{aggregate, consistency_with_threshold, PairwiseMatrix};
use ahp_experts::parse::{
    parse_ballot, parse_expert_count_advice, parse_grouped_items, parse_item_list,
    parse_level_advice, parse_matrices, parse_personas, Parsed,
};
use ahp_experts::persona::{validate_panel, ExpertPersona};
use ahp_experts::prompt::{comma_list, numbered_list, tree_listing, SCALE_INSTRUCTIONS};
use ahp_experts::{
    converse, elicit, BackendError, Bindings, ContextBudget, Conversation, ElicitError, Elicited,
    ExpertBackend, Intent, MatrixRequest, Prompt, TemplateName, TemplateSet,
};

use crate::config::PipelineConfig;
use crate::error::PipelineError;
use crate::report::synthesize;
use crate::session::{
    Advice, AggregateEntry, ExpertMatrix, FailureRecord, Funnel, GroupProposal, ItemStage,
    NodeJudgments, NodeKind, ParentFunnel, PersonaLog, Proposal, RepairRecord, SessionState, Stage,
    SubcriteriaStage,
};

/// A stage error plus, for expert failures, the failing transcript.
struct StageFailure {
    error: PipelineError,
    persona: Option<String>,
    transcript: Option<Conversation>,
}

impl From<PipelineError> for Box<StageFailure> {
    fn from(error: PipelineError) -> Self {
        Box::new(StageFailure {
            error,
            persona: None,
            transcript: None,
        })
    }
}

type StageResult<T> = Result<T, Box<StageFailure>>;

pub struct Runner<'a> {
    backend: &'a dyn ExpertBackend,
    templates: TemplateSet,
    base_dir: PathBuf,
}

impl<'a> Runner<'a> {
    /// `base_dir` resolves relative paths in the configuration.
    pub fn new(backend: &'a dyn ExpertBackend, templates: TemplateSet, base_dir: &Path) -> Self {
        Self {
            backend,
            templates,
            base_dir: base_dir.to_path_buf(),
        }
    }

    /// Runs `stage` if it is the cursor. Completed stages are a no-op;
    /// stages beyond the cursor are an error.
    pub fn run_stage(&self, session: &mut SessionState, stage: Stage) -> Result<(), PipelineError> {
        if stage < session.stage || stage == Stage::Done {
            return Ok(());
        }
        if stage > session.stage {
            return Err(PipelineError::Session(format!(
                "cannot run stage {stage}: the session is at stage {}",
                session.stage
            )));
        }
        self.step(session)
    }

    /// Runs the cursor's stage and advances the cursor.
    pub fn step(&self, session: &mut SessionState) -> Result<(), PipelineError> {
        let stage = session.stage;
        if stage == Stage::Done {
            return Ok(());
        }
        let mut work = session.clone();
        match self.execute(&mut work, stage) {
            Ok(()) => {
                work.stage = stage.next();
                *session = work;
                log::info!("stage {stage} complete");
                Ok(())
            }
            Err(f) => {
                session.failures.push(FailureRecord {
                    stage,
                    persona: f.persona,
                    error: f.error.to_string(),
                    transcript: f.transcript,
                });
                Err(f.error)
            }
        }
    }

    /// Runs stages until done, or until `until` has completed. `checkpoint`
    /// sees the session after every completed stage and after a failure.
    pub fn run(
        &self,
        session: &mut SessionState,
        until: Option<Stage>,
        mut checkpoint: impl FnMut(&SessionState) -> Result<(), PipelineError>,
    ) -> Result<(), PipelineError> {
        while session.stage != Stage::Done && until.is_none_or(|u| session.stage <= u) {
            match self.step(session) {
                Ok(()) => checkpoint(session)?,
                Err(e) => {
                    checkpoint(session)?;
                    return Err(e);
                }
            }
        }
        Ok(())
    }

    fn execute(&self, s: &mut SessionState, stage: Stage) -> StageResult<()> {
        match stage {
            Stage::Init => self.init(s),
            Stage::Advise => self.advise(s),
            Stage::Personas => self.personas(s),
            Stage::Criteria => self.criteria(s),
            Stage::Subcriteria => self.subcriteria(s),
            Stage::Alternatives => self.alternatives(s),
            Stage::PairwiseTop => self.pairwise_top(s),
            Stage::PairwiseSub => self.pairwise_sub(s),
            Stage::PairwiseAlt => self.pairwise_alt(s),
            Stage::Aggregate => self.aggregate(s),
            Stage::Synthesize => {
                s.report = Some(synthesize(s)?);
                Ok(())
            }
            Stage::Done => Ok(()),
        }
    }

    fn render(&self, name: TemplateName, bindings: Bindings) -> Result<String, PipelineError> {
        Ok(self.templates.render(name, &bindings)?)
    }

    fn init(&self, s: &mut SessionState) -> StageResult<()> {
        s.config.validate()?;
        s.template_versions = self.templates.versions();
        let guide = ExpertPersona::guide();
        s.conversations
            .entry(guide.id.clone())
            .or_insert_with(|| PersonaLog::new(&guide));
        Ok(())
    }

    fn advise(&self, s: &mut SessionState) -> StageResult<()> {
        let experts = s.config.panel.experts;
        let levels = s.config.hierarchy.levels;
        if !s.config.panel.advise {
            s.artifacts.advice = Some(Advice {
                skipped: true,
                suggested_experts: None,
                suggested_levels: None,
                experts,
                levels,
                warnings: Vec::new(),
            });
            return Ok(());
        }
        let goal = s.config.decision.goal.clone();
        let guide = ExpertPersona::guide();
        let budget = s.config.budget();
        let log = s
            .conversations
            .get_mut(&guide.id)
            .expect("init created the guide log");
        let mut ask = |name, bindings, intent| -> StageResult<String> {
            let prompt = Prompt {
                text: self.render(name, bindings)?,
                intent,
            };
            converse(self.backend, &guide, &mut log.active, &prompt, &budget).map_err(|e| {
                Box::new(StageFailure {
                    error: e.into(),
                    persona: Some(guide.id.clone()),
                    transcript: Some(log.active.clone()),
                })
            })
        };
        let expert_reply = ask(
            TemplateName::AdviseExperts,
            Bindings::new().with("goal", goal.clone()),
            Intent::AdviseExperts { goal: goal.clone() },
        )?;
        let level_reply = ask(
            TemplateName::AdviseLevels,
            Bindings::new(),
            Intent::AdviseLevels { goal: goal.clone() },
        )?;

        let mut warnings = Vec::new();
        let suggested_experts = parse_expert_count_advice(&expert_reply);
        match suggested_experts {
            None => warnings.push(format!(
                "could not read an expert count from the guide; using {experts}"
            )),
            Some((lo, hi)) if !(lo as usize..=hi as usize).contains(&experts) => warnings.push(
                format!("guide suggested {lo}-{hi} experts; keeping the configured {experts}"),
            ),
            Some(_) => {}
        }
        let suggested_levels = parse_level_advice(&level_reply);
        match suggested_levels {
            None => warnings.push(format!(
                "could not read a level count from the guide; using {levels}"
            )),
            Some(l) if l != levels => warnings.push(format!(
                "guide suggested {l} criteria levels; only {levels} is supported"
            )),
            Some(_) => {}
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        s.artifacts.advice = Some(Advice {
            skipped: false,
            suggested_experts,
            suggested_levels,
            experts,
            levels,
            warnings,
        });
        Ok(())
    }

    fn personas(&self, s: &mut SessionState) -> StageResult<()> {
        let count = s.config.panel.experts;
        let personas = match &s.config.panel.personas_file {
            Some(file) => {
                let path = PipelineConfig::resolve(&self.base_dir, file);
                let text =
                    std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
                let personas: Vec<ExpertPersona> = serde_json::from_str(&text)
                    .map_err(|e| PipelineError::Panel(format!("{}: {e}", path.display())))?;
                if personas.len() != count {
                    return Err(PipelineError::Panel(format!(
                        "{} lists {} personas, expected {count}",
                        path.display(),
                        personas.len()
                    ))
                    .into());
                }
                personas
            }
            None => {
                let guide = ExpertPersona::guide();
                let budget = s.config.budget();
                let max_repairs = s.config.elicitation.max_repairs;
                let prompt = Prompt {
                    text: self.render(
                        TemplateName::Personas,
                        Bindings::new().with("n", count.to_string()),
                    )?,
                    intent: Intent::Personas { count },
                };
                let log = s
                    .conversations
                    .get_mut(&guide.id)
                    .expect("init created the guide log");
                let got = elicit(
                    self.backend,
                    &guide,
                    &mut log.active,
                    &self.templates,
                    &prompt,
                    &budget,
                    max_repairs,
                    |r| parse_personas(r, count),
                )
                .map_err(|e| {
                    Box::new(StageFailure {
                        error: PipelineError::Elicit {
                            stage: Stage::Personas,
                            persona: guide.id.clone(),
                            source: e,
                        },
                        persona: Some(guide.id.clone()),
                        transcript: Some(log.active.clone()),
                    })
                })?;
                record_repairs(s, Stage::Personas, &guide.id, got.repairs);
                got.value
            }
        };
        validate_panel(&personas).map_err(|e| PipelineError::Panel(e.to_string()))?;
        if personas
            .iter()
            .any(|p| p.id == ahp_experts::persona::GUIDE_ID)
        {
            return Err(PipelineError::Panel("an expert uses the guide's id".into()).into());
        }
        for p in &personas {
            s.conversations.insert(p.id.clone(), PersonaLog::new(p));
        }
        s.artifacts.personas = Some(personas);
        Ok(())
    }

    fn criteria(&self, s: &mut SessionState) -> StageResult<()> {
        let goal = s.config.decision.goal.clone();
        let n = s.config.hierarchy.top_criteria;
        let max_words = s.config.elicitation.max_words;
        let prompt = Prompt {
            text: self.render(
                TemplateName::Criteria,
                Bindings::new()
                    .with("goal", goal.clone())
                    .with("n", n.to_string()),
            )?,
            intent: Intent::ProposeCriteria { goal, count: n },
        };
        let lists = self.fan_out(
            s,
            Stage::Criteria,
            "",
            |_, _| prompt.clone(),
            |r| parse_item_list(r, n, max_words),
        )?;
        let proposals: Vec<Proposal> = lists
            .into_iter()
            .map(|(expert, labels)| Proposal { expert, labels })
            .collect();
        let mut pool = CandidatePool::new(PoolStage::Criteria);
        for p in &proposals {
            for l in &p.labels {
                pool.push(l.clone(), p.expert.clone());
            }
        }
        let funnel = self.vote(s, Stage::Criteria, pool, n, None)?;
        s.artifacts.criteria = Some(ItemStage { proposals, funnel });
        Ok(())
    }

    fn subcriteria(&self, s: &mut SessionState) -> StageResult<()> {
        self.rotate_all(s)?;
        let parents = selected_criteria(s)?;
        let n = s.config.hierarchy.sub_per_criterion;
        let max_words = s.config.elicitation.max_words;
        let prompt = Prompt {
            text: self.render(
                TemplateName::Subcriteria,
                Bindings::new()
                    .with("n", n.to_string())
                    .with("items", comma_list(&parents)),
            )?,
            intent: Intent::ProposeSubcriteria {
                parents: parents.clone(),
                count: n,
            },
        };
        let carry = carryover(self, s)?;
        let lists = self.fan_out(
            s,
            Stage::Subcriteria,
            &carry,
            |_, _| prompt.clone(),
            |r| parse_grouped_items(r, &parents, n, max_words),
        )?;
        let proposals: Vec<GroupProposal> = lists
            .into_iter()
            .map(|(expert, groups)| GroupProposal { expert, groups })
            .collect();
        let mut funnels = Vec::with_capacity(parents.len());
        for (gi, parent) in parents.iter().enumerate() {
            let mut pool = CandidatePool::new(PoolStage::SubCriteria {
                parent: parent.clone(),
            });
            for p in &proposals {
                for l in &p.groups[gi].1 {
                    pool.push(l.clone(), p.expert.clone());
                }
            }
            let funnel = self.vote(s, Stage::Subcriteria, pool, n, Some(parent))?;
            funnels.push(ParentFunnel {
                parent: parent.clone(),
                funnel,
            });
        }
        s.artifacts.subcriteria = Some(SubcriteriaStage {
            proposals,
            parents: funnels,
        });
        Ok(())
    }

    fn alternatives(&self, s: &mut SessionState) -> StageResult<()> {
        self.rotate_all(s)?;
        let goal = s.config.decision.goal.clone();
        let n = s.config.hierarchy.candidate_alternatives_per_expert;
        let keep = s.config.hierarchy.final_alternatives;
        let max_words = s.config.elicitation.alternative_max_words;
        let prompt = Prompt {
            text: self.render(
                TemplateName::Alternatives,
                Bindings::new()
                    .with("goal", goal.clone())
                    .with("n", n.to_string()),
            )?,
            intent: Intent::ProposeAlternatives { goal, count: n },
        };
        let carry = carryover(self, s)?;
        let lists = self.fan_out(
            s,
            Stage::Alternatives,
            &carry,
            |_, _| prompt.clone(),
            |r| parse_item_list(r, n, max_words),
        )?;
        let proposals: Vec<Proposal> = lists
            .into_iter()
            .map(|(expert, labels)| Proposal { expert, labels })
            .collect();
        let mut pool = CandidatePool::new(PoolStage::Alternatives);
        for p in &proposals {
            for l in &p.labels {
                pool.push(l.clone(), p.expert.clone());
            }
        }
        let funnel = self.vote(s, Stage::Alternatives, pool, keep, None)?;
        s.artifacts.alternatives = Some(ItemStage { proposals, funnel });
        Ok(())
    }

    /// Dedupes `pool`, collects one ballot per expert and keeps the top `keep`.
    fn vote(
        &self,
        s: &mut SessionState,
        stage: Stage,
        pool: CandidatePool,
        keep: usize,
        parent: Option<&str>,
    ) -> StageResult<Funnel> {
        let aliases = s.config.alias_table()?;
        let deduped = dedupe(&pool, &aliases);
        let items = deduped.pool.labels();
        let n = items.len().to_string();
        let listing = numbered_list(&items);
        let (template, bindings) = match (stage, parent) {
            (Stage::Subcriteria, Some(p)) => (
                TemplateName::SubcriteriaBallot,
                Bindings::new()
                    .with("n", n)
                    .with("items", listing)
                    .with("parent", p),
            ),
            (Stage::Alternatives, _) => (
                TemplateName::AlternativesBallot,
                Bindings::new()
                    .with("n", n)
                    .with("items", listing)
                    .with("goal", s.config.decision.goal.clone()),
            ),
            _ => (
                TemplateName::CriteriaBallot,
                Bindings::new().with("n", n).with("items", listing),
            ),
        };
        let prompt = Prompt {
            text: self.render(template, bindings)?,
            intent: Intent::Ballot {
                items: items.clone(),
                parent: parent.map(str::to_string),
            },
        };
        let carry = carryover(self, s)?;
        let scored = self.fan_out(
            s,
            stage,
            &carry,
            |_, _| prompt.clone(),
            |r| parse_ballot(r, &items),
        )?;
        let ballots: Vec<ScoreBallot> = scored
            .into_iter()
            .map(|(expert, scores)| ScoreBallot { expert, scores })
            .collect();
        let wrap = |e| PipelineError::Elicitation { stage, source: e };
        let totals = tally(&ballots, &deduped.pool).map_err(wrap)?;
        let selected = select_top_n(&totals, keep).map_err(wrap)?;
        Ok(Funnel {
            pool,
            deduped,
            ballots,
            tally: totals,
            selected,
        })
    }

    fn pairwise_top(&self, s: &mut SessionState) -> StageResult<()> {
        self.rotate_all(s)?;
        let goal = s.config.decision.goal.clone();
        let criteria = selected_criteria(s)?;
        let request = MatrixRequest {
            node: goal.clone(),
            labels: criteria.clone(),
        };
        let prompt = Prompt {
            text: self.render(
                TemplateName::PairwiseTop,
                Bindings::new()
                    .with("items", comma_list(&criteria))
                    .with("goal", goal.clone())
                    .with("scale_instructions", SCALE_INSTRUCTIONS),
            )?,
            intent: Intent::Matrices {
                requests: vec![request.clone()],
            },
        };
        let carry = carryover(self, s)?;
        let requests = [request];
        let got = self.fan_out(
            s,
            Stage::PairwiseTop,
            &carry,
            |_, _| prompt.clone(),
            |r| parse_matrices(r, &requests),
        )?;
        let nodes = vec![(goal, NodeKind::Top, criteria)];
        s.artifacts.pairwise_top = Some(transpose(nodes, got));
        Ok(())
    }

    fn pairwise_sub(&self, s: &mut SessionState) -> StageResult<()> {
        self.rotate_all(s)?;
        let groups: Vec<(String, Vec<String>)> = sub_groups(s)?;
        let batch = s.config.judgment.matrix_batch;
        let n = s.config.hierarchy.sub_per_criterion.to_string();
        let mut prompts = Vec::new();
        for chunk in groups.chunks(batch) {
            let requests: Vec<MatrixRequest> = chunk
                .iter()
                .map(|(p, kids)| MatrixRequest {
                    node: p.clone(),
                    labels: kids.clone(),
                })
                .collect();
            let text = self.render(
                TemplateName::PairwiseSub,
                Bindings::new()
                    .with("n", n.clone())
                    .with("items", tree_listing(chunk))
                    .with("scale_instructions", SCALE_INSTRUCTIONS),
            )?;
            prompts.push((
                Prompt {
                    text,
                    intent: Intent::Matrices {
                        requests: requests.clone(),
                    },
                },
                requests,
            ));
        }
        let carry = carryover(self, s)?;
        let got = self.fan_out_batches(s, Stage::PairwiseSub, &carry, &prompts)?;
        let nodes = groups
            .into_iter()
            .map(|(p, kids)| (p, NodeKind::Sub, kids))
            .collect();
        s.artifacts.pairwise_sub = Some(transpose(nodes, got));
        Ok(())
    }

    fn pairwise_alt(&self, s: &mut SessionState) -> StageResult<()> {
        self.rotate_all(s)?;
        let leaves: Vec<(String, String)> = sub_groups(s)?
            .into_iter()
            .flat_map(|(p, kids)| kids.into_iter().map(move |k| (p.clone(), k)))
            .collect();
        let alternatives = selected_alternatives(s)?;
        let batch = s.config.judgment.matrix_batch;
        let mut prompts = Vec::new();
        for chunk in leaves.chunks(batch) {
            let children: Vec<&str> = chunk.iter().map(|(_, k)| k.as_str()).collect();
            let requests: Vec<MatrixRequest> = chunk
                .iter()
                .map(|(_, k)| MatrixRequest {
                    node: k.clone(),
                    labels: alternatives.clone(),
                })
                .collect();
            let text = self.render(
                TemplateName::PairwiseAlt,
                Bindings::new()
                    .with("n", chunk.len().to_string())
                    .with("items", comma_list(&children))
                    .with("alternatives", comma_list(&alternatives))
                    .with("scale_instructions", SCALE_INSTRUCTIONS),
            )?;
            prompts.push((
                Prompt {
                    text,
                    intent: Intent::Matrices {
                        requests: requests.clone(),
                    },
                },
                requests,
            ));
        }
        let carry = carryover(self, s)?;
        let got = self.fan_out_batches(s, Stage::PairwiseAlt, &carry, &prompts)?;
        let nodes = leaves
            .into_iter()
            .map(|(p, k)| {
                (
                    leaf_key(&p, &k),
                    NodeKind::Alternatives,
                    alternatives.clone(),
                )
            })
            .collect();
        s.artifacts.pairwise_alt = Some(transpose(nodes, got));
        Ok(())
    }

    fn aggregate(&self, s: &mut SessionState) -> StageResult<()> {
        let method = s.config.judgment.aggregation;
        let threshold = s.config.judgment.cr_threshold;
        let a = &s.artifacts;
        let nodes = a
            .pairwise_top
            .iter()
            .chain(&a.pairwise_sub)
            .chain(&a.pairwise_alt)
            .flatten()
            .collect::<Vec<_>>();
        if a.pairwise_top.is_none() || a.pairwise_sub.is_none() || a.pairwise_alt.is_none() {
            return Err(PipelineError::MissingArtifact("expert matrices").into());
        }
        let mut out = Vec::with_capacity(nodes.len());
        for node in nodes {
            let math = |e| PipelineError::Math {
                node: node.node.clone(),
                source: e,
            };
            let matrices: Vec<PairwiseMatrix> =
                node.experts.iter().map(|e| e.matrix.clone()).collect();
            let agg = aggregate(&matrices, method).map_err(math)?;
            let (priorities, report) = consistency_with_threshold(&agg, threshold).map_err(math)?;
            let mut expert_consistency = Vec::with_capacity(node.experts.len());
            for e in &node.experts {
                let (_, c) = consistency_with_threshold(&e.matrix, threshold).map_err(math)?;
                expert_consistency.push((e.expert.clone(), c));
            }
            out.push(AggregateEntry {
                node: node.node.clone(),
                kind: node.kind,
                matrix: agg,
                priorities,
                consistency: report,
                expert_consistency,
                flagged: !report.consistent,
            });
        }
        let flagged: Vec<String> = out
            .iter()
            .filter(|e| e.flagged)
            .map(|e| e.node.clone())
            .collect();
        for node in &flagged {
            log::warn!("aggregate matrix {node} is at or above the CR threshold {threshold}");
        }
        if s.config.judgment.strict_consistency && !flagged.is_empty() {
            return Err(PipelineError::Inconsistent(flagged).into());
        }
        s.artifacts.aggregates = Some(out);
        Ok(())
    }

    /// Starts a fresh conversation for every expert, carrying over the
    /// decisions committed so far.
    fn rotate_all(&self, s: &mut SessionState) -> StageResult<()> {
        let carry = carryover(self, s)?;
        let ids: Vec<String> = s.personas()?.iter().map(|p| p.id.clone()).collect();
        for id in ids {
            if let Some(log) = s.conversations.get_mut(&id) {
                log.rotate(&carry);
            }
        }
        Ok(())
    }

    /// One prompt per expert (built by `make`), parsed with repairs.
    /// Experts run concurrently up to the configured parallelism; results
    /// come back in panel order.
    fn fan_out<T: Send>(
        &self,
        s: &mut SessionState,
        stage: Stage,
        carry: &str,
        make: impl Fn(&ExpertPersona, &PersonaLog) -> Prompt + Sync,
        parse: impl Fn(&str) -> Parsed<T> + Sync,
    ) -> StageResult<Vec<(String, T)>> {
        let results = self.parallel(s, stage, |persona, log, ctx| {
            let prompt = make(persona, log);
            let got = ctx.ask(persona, log, carry, &prompt, &parse)?;
            Ok((vec![got.value], got.repairs))
        })?;
        Ok(results
            .into_iter()
            .map(|(id, mut v)| (id, v.remove(0)))
            .collect())
    }

    /// Several matrix prompts per expert, in order; returns each expert's
    /// matrices concatenated in request order.
    fn fan_out_batches(
        &self,
        s: &mut SessionState,
        stage: Stage,
        carry: &str,
        prompts: &[(Prompt, Vec<MatrixRequest>)],
    ) -> StageResult<Vec<(String, Vec<PairwiseMatrix>)>> {
        self.parallel(s, stage, |persona, log, ctx| {
            let mut all = Vec::new();
            let mut repairs = 0;
            for (prompt, requests) in prompts {
                let got = ctx.ask(persona, log, carry, prompt, &|r: &str| {
                    parse_matrices(r, requests)
                })?;
                repairs += got.repairs;
                all.extend(got.value);
            }
            Ok((all, repairs))
        })
    }

    fn parallel<T: Send>(
        &self,
        s: &mut SessionState,
        stage: Stage,
        job: impl Fn(&ExpertPersona, &mut PersonaLog, &Ask<'_>) -> Result<(Vec<T>, u32), ElicitError>
            + Sync,
    ) -> StageResult<Vec<(String, Vec<T>)>> {
        let personas = s.personas()?.to_vec();
        let ctx = Ask {
            backend: self.backend,
            templates: &self.templates,
            budget: s.config.budget(),
            max_repairs: s.config.elicitation.max_repairs,
        };
        let mut logs: Vec<PersonaLog> = personas
            .iter()
            .map(|p| {
                s.conversations
                    .remove(&p.id)
                    .unwrap_or_else(|| PersonaLog::new(p))
            })
            .collect();
        let width = s.config.run.parallelism.max(1);
        let mut results = Vec::with_capacity(personas.len());
        for (ps, ls) in personas.chunks(width).zip(logs.chunks_mut(width)) {
            let chunk: Vec<_> = std::thread::scope(|scope| {
                let handles: Vec<_> = ps
                    .iter()
                    .zip(ls.iter_mut())
                    .map(|(p, log)| {
                        let (job, ctx) = (&job, &ctx);
                        scope.spawn(move || job(p, log, ctx))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("expert worker panicked"))
                    .collect()
            });
            results.extend(chunk);
        }
        let mut out = Vec::with_capacity(personas.len());
        let mut failure = None;
        for ((p, log), res) in personas.iter().zip(&logs).zip(results) {
            match res {
                Ok((values, repairs)) => {
                    out.push((p.id.clone(), values));
                    if repairs > 0 {
                        s.artifacts.repairs.push(RepairRecord {
                            stage,
                            persona: p.id.clone(),
                            repairs,
                        });
                    }
                }
                Err(e) if failure.is_none() => {
                    failure = Some(Box::new(StageFailure {
                        error: PipelineError::Elicit {
                            stage,
                            persona: p.id.clone(),
                            source: e,
                        },
                        persona: Some(p.id.clone()),
                        transcript: Some(log.active.clone()),
                    }));
                }
                Err(_) => {}
            }
        }
        for (p, log) in personas.iter().zip(logs.drain(..)) {
            s.conversations.insert(p.id.clone(), log);
        }
        match failure {
            Some(f) => Err(f),
            None => Ok(out),
        }
    }
}

/// Shared per-stage elicitation settings.
struct Ask<'a> {
    backend: &'a dyn ExpertBackend,
    templates: &'a TemplateSet,
    budget: ContextBudget,
    max_repairs: u32,
}

impl Ask<'_> {
    /// Rotates ahead of a nearly full context, and once more if the
    /// message itself would overflow it.
    fn ask<T>(
        &self,
        persona: &ExpertPersona,
        log: &mut PersonaLog,
        carry: &str,
        prompt: &Prompt,
        parse: &(impl Fn(&str) -> Parsed<T> + ?Sized),
    ) -> Result<Elicited<T>, ElicitError> {
        if self.budget.should_rotate(&log.active) && !log.active.messages.is_empty() {
            log::info!(
                "{}: context at rotation threshold, starting a new conversation",
                persona.id
            );
            log.rotate(carry);
        }
        let run = |log: &mut PersonaLog| {
            elicit(
                self.backend,
                persona,
                &mut log.active,
                self.templates,
                prompt,
                &self.budget,
                self.max_repairs,
                parse,
            )
        };
        match run(log) {
            Err(ElicitError::Backend(BackendError::ContextBudgetExceeded { .. }))
                if !log.active.messages.is_empty() =>
            {
                log::info!(
                    "{}: context budget exceeded, starting a new conversation",
                    persona.id
                );
                log.rotate(carry);
                run(log)
            }
            other => other,
        }
    }
}

fn record_repairs(s: &mut SessionState, stage: Stage, persona: &str, repairs: u32) {
    if repairs > 0 {
        s.artifacts.repairs.push(RepairRecord {
            stage,
            persona: persona.to_string(),
            repairs,
        });
    }
}

pub fn leaf_key(parent: &str, child: &str) -> String {
    format!("{parent} > {child}")
}

fn selected_criteria(s: &SessionState) -> Result<Vec<String>, PipelineError> {
    Ok(s.artifacts
        .criteria
        .as_ref()
        .ok_or(PipelineError::MissingArtifact("criteria"))?
        .funnel
        .selected
        .clone())
}

fn selected_alternatives(s: &SessionState) -> Result<Vec<String>, PipelineError> {
    Ok(s.artifacts
        .alternatives
        .as_ref()
        .ok_or(PipelineError::MissingArtifact("alternatives"))?
        .funnel
        .selected
        .clone())
}

fn sub_groups(s: &SessionState) -> Result<Vec<(String, Vec<String>)>, PipelineError> {
    let subs = s
        .artifacts
        .subcriteria
        .as_ref()
        .ok_or(PipelineError::MissingArtifact("sub-criteria"))?;
    Ok(subs
        .parents
        .iter()
        .map(|p| (p.parent.clone(), p.funnel.selected.clone()))
        .collect())
}

/// Summary of committed decisions sent at the start of a new conversation.
fn carryover(runner: &Runner<'_>, s: &SessionState) -> Result<String, PipelineError> {
    let a = &s.artifacts;
    let mut lines = Vec::new();
    if let Some(c) = &a.criteria {
        lines.push(format!(
            "Top-level criteria: {}.",
            comma_list(&c.funnel.selected)
        ));
    }
    if let Some(sub) = &a.subcriteria {
        for p in &sub.parents {
            lines.push(format!(
                "Sub-criteria of {}: {}.",
                p.parent,
                comma_list(&p.funnel.selected)
            ));
        }
    }
    if let Some(alt) = &a.alternatives {
        lines.push(format!(
            "Alternatives: {}.",
            comma_list(&alt.funnel.selected)
        ));
    }
    if lines.is_empty() {
        return Ok(String::new());
    }
    runner.render(
        TemplateName::Carryover,
        Bindings::new()
            .with("goal", s.config.decision.goal.clone())
            .with("items", lines.join("\n")),
    )
}

/// Regroups per-expert matrix lists (each in node order) into per-node
/// judgments (each in panel order).
fn transpose(
    nodes: Vec<(String, NodeKind, Vec<String>)>,
    per_expert: Vec<(String, Vec<PairwiseMatrix>)>,
) -> Vec<NodeJudgments> {
    let mut out: Vec<NodeJudgments> = nodes
        .into_iter()
        .map(|(node, kind, labels)| NodeJudgments {
            node,
            kind,
            labels,
            experts: Vec::new(),
        })
        .collect();
    for (expert, matrices) in per_expert {
        debug_assert_eq!(matrices.len(), out.len());
        for (slot, matrix) in out.iter_mut().zip(matrices) {
            slot.experts.push(ExpertMatrix {
                expert: expert.clone(),
                matrix,
            });
        }
    }
    out
}
