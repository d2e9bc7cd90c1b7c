//! Send, parse, and on a malformed reply send a reminder, up to a fixed budget.

use crate::backend::{converse, BackendError, ExpertBackend};
use crate::conversation::{ContextBudget, Conversation};
use crate::parse::{reminder_lines, ParseViolation, Parsed};
use crate::persona::ExpertPersona;
use crate::prompt::{Bindings, Intent, Prompt, TemplateError, TemplateName, TemplateSet};

#[derive(Debug, thiserror::Error)]
pub enum ElicitError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("{persona}: still malformed after {repairs} repair prompts: {}", summary(.violations))]
    RepairExhausted {
        persona: String,
        repairs: u32,
        violations: Vec<ParseViolation>,
    },
}

fn summary(violations: &[ParseViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elicited<T> {
    pub value: T,
    /// Reminder prompts that were needed.
    pub repairs: u32,
}

/// Reminder naming every violated rule; the intent keeps the original request.
pub fn repair_prompt(
    templates: &TemplateSet,
    violations: &[ParseViolation],
    original: &Intent,
) -> Result<Prompt, TemplateError> {
    let text = templates.render(
        TemplateName::Repair,
        &Bindings::new().with("items", reminder_lines(violations)),
    )?;
    let original = match original {
        Intent::Repair { original, .. } => original.as_ref().clone(),
        other => other.clone(),
    };
    Ok(Prompt {
        text,
        intent: Intent::Repair {
            violations: violations.iter().map(ToString::to_string).collect(),
            original: Box::new(original),
        },
    })
}

/// Sends `prompt` and parses the reply. Each malformed reply triggers a
/// reminder, at most `max_repairs` times. Every exchange stays in
/// `conversation`, including on failure.
#[allow(clippy::too_many_arguments)]
pub fn elicit<T>(
    backend: &dyn ExpertBackend,
    persona: &ExpertPersona,
    conversation: &mut Conversation,
    templates: &TemplateSet,
    prompt: &Prompt,
    budget: &ContextBudget,
    max_repairs: u32,
    parse: impl Fn(&str) -> Parsed<T>,
) -> Result<Elicited<T>, ElicitError> {
    let mut reply = converse(backend, persona, conversation, prompt, budget)?;
    let mut repairs = 0;
    loop {
        match parse(&reply) {
            Ok(value) => return Ok(Elicited { value, repairs }),
            Err(violations) if repairs >= max_repairs => {
                return Err(ElicitError::RepairExhausted {
                    persona: persona.id.clone(),
                    repairs,
                    violations,
                })
            }
            Err(violations) => {
                log::info!("{}: repairing reply ({})", persona.id, summary(&violations));
                let reminder = repair_prompt(templates, &violations, &prompt.intent)?;
                reply = converse(backend, persona, conversation, &reminder, budget)?;
                repairs += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{ScriptRule, ScriptedBackend};
    use crate::parse::parse_matrix;

    fn labels() -> Vec<String> {
        vec!["A".into(), "B".into()]
    }

    fn run(
        rules: Vec<ScriptRule>,
        max_repairs: u32,
    ) -> (
        Result<Elicited<ahp_core::PairwiseMatrix>, ElicitError>,
        Conversation,
    ) {
        let backend = ScriptedBackend::from_rules(rules);
        let persona = ExpertPersona::expert("Ann", None, "d", "i");
        let mut conv = Conversation::new(&persona);
        let out = elicit(
            &backend,
            &persona,
            &mut conv,
            &TemplateSet::builtin(),
            &Prompt::freeform("build the matrix"),
            &ContextBudget::default(),
            max_repairs,
            |r| parse_matrix(r, &labels()),
        );
        (out, conv)
    }

    const BAD: &str = "| | A | B |\n|---|---|---|\n| A | 1 | 2 |\n| B | 1/3 | 1 |";
    const GOOD: &str = "| | A | B |\n|---|---|---|\n| A | 1 | 2 |\n| B | 1/2 | 1 |";

    #[test]
    fn reciprocity_reminder_fixes_reply() {
        let rules = vec![
            ScriptRule::new(None, "reciprocal", GOOD),
            ScriptRule::new(None, "build", BAD),
        ];
        let (out, conv) = run(rules, 2);
        let out = out.unwrap();
        assert_eq!(out.repairs, 1);
        assert_eq!(out.value.get(1, 0), 0.5);
        assert!(conv.messages[2].text.contains("reciprocal"));
    }

    #[test]
    fn valid_reply_needs_no_repair() {
        let (out, conv) = run(vec![ScriptRule::new(None, "", GOOD)], 2);
        assert_eq!(out.unwrap().repairs, 0);
        assert_eq!(conv.exchanges(), 1);
    }

    #[test]
    fn budget_exhaustion_keeps_transcript() {
        let (out, conv) = run(vec![ScriptRule::new(None, "", BAD)], 2);
        match out {
            Err(ElicitError::RepairExhausted {
                repairs: 2,
                violations,
                ..
            }) => {
                assert!(matches!(violations[0], ParseViolation::Reciprocity { .. }))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(conv.exchanges(), 3);
    }

    #[test]
    fn nested_repairs_keep_the_first_request() {
        let v = [ParseViolation::EmptyReply];
        let first =
            repair_prompt(&TemplateSet::builtin(), &v, &Intent::Personas { count: 3 }).unwrap();
        let second = repair_prompt(&TemplateSet::builtin(), &v, &first.intent).unwrap();
        assert!(
            matches!(second.intent, Intent::Repair { original, .. } if *original == Intent::Personas { count: 3 })
        );
    }
}
