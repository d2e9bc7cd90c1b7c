//! Case-study fixture: published data plus the synthesized judgments that
//! fill its gaps, served by a scripted responder.

pub mod bundle;
pub mod data;
pub mod synth;

use ahp_core::PairwiseMatrix;
use ahp_experts::backend::Responder;
use ahp_experts::parse::render_matrix_table;
use ahp_experts::persona::{slug, GUIDE_ID};
use ahp_experts::prompt::numbered_list;
use ahp_experts::{Conversation, ExpertPersona, Intent, MatrixRequest, Prompt};

use crate::config::PipelineConfig;
use data::{ALIASES, ALTERNATIVES, INITIAL_CRITERIA, PERSONAS, TREE};
use synth::{FixtureMatrices, ALTERNATIVE_PROPOSALS, REPAIR_EXPERT};

/// Answers every prompt of a default-configured run on the case-study goal
/// with the published data, or with synthesized stand-ins where nothing was
/// published. Prompts outside that run get no reply.
pub struct CaseStudyScript {
    expert_ids: Vec<String>,
    matrices: FixtureMatrices,
}

impl Default for CaseStudyScript {
    fn default() -> Self {
        Self::new()
    }
}

impl CaseStudyScript {
    pub fn new() -> Self {
        let names: Vec<&str> = PERSONAS.iter().map(|p| p.name).collect();
        Self {
            expert_ids: names.iter().map(|n| slug(n)).collect(),
            matrices: synth::fixture_matrices(&names),
        }
    }

    pub fn matrices(&self) -> &FixtureMatrices {
        &self.matrices
    }

    fn guide(&self, intent: &Intent) -> Option<String> {
        match intent {
            Intent::AdviseExperts { .. } => Some(data::GUIDE_EXPERTS_REPLY.into()),
            Intent::AdviseLevels { .. } => Some(data::GUIDE_LEVELS_REPLY.into()),
            Intent::Personas { count } if *count == PERSONAS.len() => Some(personas_reply()),
            Intent::Repair { original, .. } => self.guide(original),
            _ => None,
        }
    }

    fn expert(&self, e: usize, intent: &Intent, repaired: bool) -> Option<String> {
        let name = PERSONAS[e].name;
        match intent {
            Intent::ProposeCriteria { count, .. } if *count == 7 => {
                let (_, items) = INITIAL_CRITERIA.iter().find(|(n, _)| *n == name)?;
                Some(numbered_list(items))
            }
            Intent::ProposeSubcriteria { parents, count } if *count == 3 => {
                let mut blocks = Vec::new();
                for parent in parents {
                    let p = TREE.iter().position(|(t, _)| t == parent)?;
                    blocks.push(format!(
                        "{parent}:\n{}",
                        numbered_list(&synth::sub_proposal(e, p))
                    ));
                }
                Some(blocks.join("\n\n"))
            }
            Intent::ProposeAlternatives { count, .. } if *count == 5 => {
                Some(numbered_list(&ALTERNATIVE_PROPOSALS[e]))
            }
            Intent::Ballot { items, parent } => {
                let (scope, finals): (&str, Vec<&str>) = match parent {
                    Some(p) => (p.as_str(), TREE.iter().find(|(t, _)| t == p)?.1.to_vec()),
                    None if items.iter().any(|i| i == ALTERNATIVES[0]) => {
                        ("alternatives", ALTERNATIVES.to_vec())
                    }
                    None => ("criteria", TREE.iter().map(|(t, _)| *t).collect()),
                };
                let id = &self.expert_ids[e];
                Some(
                    items
                        .iter()
                        .map(|item| {
                            format!(
                                "{item}: {}",
                                synth::ballot_score(e, id, scope, item, &finals)
                            )
                        })
                        .collect::<Vec<_>>()
                        .join("\n"),
                )
            }
            Intent::Matrices { requests } => {
                let mut tables = Vec::new();
                for r in requests {
                    let m = self.matrix(e, r)?;
                    let m = if e == REPAIR_EXPERT && !repaired && r.labels == data::top_labels() {
                        broken(m)
                    } else {
                        m.clone()
                    };
                    tables.push(render_matrix_table(&r.node, &m));
                }
                Some(tables.join("\n\n"))
            }
            Intent::Repair { original, .. } => self.expert(e, original, true),
            _ => None,
        }
    }

    fn matrix(&self, e: usize, r: &MatrixRequest) -> Option<&PairwiseMatrix> {
        let m = if r.labels == data::top_labels() {
            &self.matrices.top[e]
        } else if r.labels == data::alternative_labels() {
            &self.matrices.alternatives.get(&r.node)?[e]
        } else {
            &self.matrices.sub.get(&r.node)?[e]
        };
        (m.labels() == r.labels.as_slice()).then_some(m)
    }
}

impl Responder for CaseStudyScript {
    fn respond(
        &self,
        persona: &ExpertPersona,
        _: &Conversation,
        prompt: &Prompt,
    ) -> Option<String> {
        if persona.id == GUIDE_ID {
            return self.guide(&prompt.intent);
        }
        let e = self.expert_ids.iter().position(|id| *id == persona.id)?;
        self.expert(e, &prompt.intent, false)
    }
}

/// The same matrix with the first lower-triangle entry copied from its
/// mirror instead of inverted, so reciprocity fails.
fn broken(m: &PairwiseMatrix) -> PairwiseMatrix {
    let mut rows: Vec<Vec<f64>> = (0..m.order())
        .map(|i| (0..m.order()).map(|j| m.get(i, j)).collect())
        .collect();
    rows[1][0] = if rows[0][1] == 1.0 { 2.0 } else { rows[0][1] };
    PairwiseMatrix::from_rows(m.labels().to_vec(), rows).expect("shape is unchanged")
}

fn personas_reply() -> String {
    PERSONAS
        .iter()
        .map(|p| {
            format!(
                "{}, {}:\n\nBackground: {}\n\nPersonality/Preferences: {}",
                p.title, p.name, p.background, p.personality
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Expert personas of the case study, in panel order.
pub fn personas() -> Vec<ExpertPersona> {
    PERSONAS
        .iter()
        .map(|p| ExpertPersona::from_profile(p.title, p.name, p.background, p.personality))
        .collect()
}

/// Default configuration on the case-study goal, with the alias pairs its
/// deduplication needs and the blended price it was costed at.
pub fn config() -> PipelineConfig {
    let mut c = PipelineConfig::with_goal(data::GOAL);
    c.elicitation.aliases = ALIASES
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    c.pricing.blended_per_1k = Some(data::PRICE_PER_1K);
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use ahp_experts::parse::{parse_matrices, parse_personas};

    #[test]
    fn personas_parse_back() {
        let parsed = parse_personas(&personas_reply(), 7).unwrap();
        assert_eq!(parsed, personas());
        assert_eq!(parsed[5].name, "Lt. Col. John Abrams (Retd.)");
    }

    #[test]
    fn broken_matrix_is_rejected_then_repaired() {
        let script = CaseStudyScript::new();
        let req = MatrixRequest {
            node: data::GOAL.into(),
            labels: data::top_labels(),
        };
        let intent = Intent::Matrices {
            requests: vec![req.clone()],
        };
        let first = script.expert(REPAIR_EXPERT, &intent, false).unwrap();
        assert!(parse_matrices(&first, std::slice::from_ref(&req)).is_err());
        let repaired = Intent::Repair {
            violations: vec![],
            original: Box::new(intent),
        };
        let second = script.expert(REPAIR_EXPERT, &repaired, false).unwrap();
        assert!(parse_matrices(&second, &[req]).is_ok());
    }
}
