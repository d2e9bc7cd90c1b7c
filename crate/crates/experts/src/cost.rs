//! Token-based cost accounting. All money arithmetic is in integers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::conversation::{Author, Conversation, TOKENS_PER_WORD};
use crate::persona::Role;

/// Prices in dollars per 1,000 tokens. A blended rate, when present, applies
/// to all tokens; otherwise input and output rates apply to user and expert
/// messages respectively.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pricing {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_per_1k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_per_1k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blended_per_1k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CostError {
    #[error("no pricing given: set a blended rate or both input and output rates")]
    MissingPricing,
    #[error("price {0} is negative or not finite")]
    InvalidPrice(f64),
}

pub const ROUNDING_RULE: &str =
    "each persona's cost is rounded half-up to whole cents; totals are sums of rounded per-persona costs";

/// Micro-dollars per 1k tokens.
fn micro(rate: f64) -> Result<u64, CostError> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(CostError::InvalidPrice(rate));
    }
    Ok((rate * 1e6).round() as u64)
}

/// 1k tokens at one micro-dollar each, expressed in cents.
const DENOM: u128 = 1000 * 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Rates {
    Blended(u64),
    Split { input: u64, output: u64 },
}

impl Pricing {
    pub fn blended(rate: f64) -> Self {
        Self {
            blended_per_1k: Some(rate),
            ..Self::default()
        }
    }

    fn rates(&self) -> Result<Rates, CostError> {
        match (self.blended_per_1k, self.input_per_1k, self.output_per_1k) {
            (Some(b), _, _) => Ok(Rates::Blended(micro(b)?)),
            (None, Some(i), Some(o)) => Ok(Rates::Split {
                input: micro(i)?,
                output: micro(o)?,
            }),
            _ => Err(CostError::MissingPricing),
        }
    }

    /// Rounded cents for the given token counts.
    pub fn cents(&self, input_tokens: u64, output_tokens: u64) -> Result<u64, CostError> {
        let micro_k = match self.rates()? {
            Rates::Blended(r) => u128::from(input_tokens + output_tokens) * u128::from(r),
            Rates::Split { input, output } => {
                u128::from(input_tokens) * u128::from(input)
                    + u128::from(output_tokens) * u128::from(output)
            }
        };
        Ok(((micro_k + DENOM / 2) / DENOM) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaCost {
    pub persona: String,
    pub role: Role,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub tokens: u64,
    pub cents: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub pricing: Pricing,
    pub tokens_per_word: f64,
    pub rounding_rule: String,
    pub per_persona: Vec<PersonaCost>,
    /// Experts only.
    pub panel_cents: u64,
    pub guide_cents: u64,
    pub total_cents: u64,
    /// Whole dollars, rounded up from the total.
    pub headline_dollars: u64,
}

impl CostReport {
    pub fn expert_costs(&self) -> impl Iterator<Item = &PersonaCost> {
        self.per_persona.iter().filter(|p| p.role == Role::Expert)
    }
}

pub fn format_cents(cents: u64) -> String {
    format!("${}.{:02}", cents / 100, cents % 100)
}

/// Sums every conversation (active and archived) per persona and prices it.
/// `role_of` classifies persona ids; unknown ids count as experts.
pub fn estimate_cost<'a>(
    conversations: impl IntoIterator<Item = &'a Conversation>,
    role_of: impl Fn(&str) -> Option<Role>,
    pricing: &Pricing,
) -> Result<CostReport, CostError> {
    pricing.rates()?;
    let mut tally: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for conv in conversations {
        let entry = tally.entry(conv.persona.clone()).or_default();
        entry.0 += conv.tokens_by_author(Author::User);
        entry.1 += conv.tokens_by_author(Author::Expert);
    }
    let mut per_persona = Vec::with_capacity(tally.len());
    for (persona, (input, output)) in tally {
        let role = role_of(&persona).unwrap_or(Role::Expert);
        per_persona.push(PersonaCost {
            cents: pricing.cents(input, output)?,
            role,
            input_tokens: input,
            output_tokens: output,
            tokens: input + output,
            persona,
        });
    }
    let panel_cents = per_persona
        .iter()
        .filter(|p| p.role == Role::Expert)
        .map(|p| p.cents)
        .sum();
    let guide_cents = per_persona
        .iter()
        .filter(|p| p.role == Role::Guide)
        .map(|p| p.cents)
        .sum();
    let total_cents = panel_cents + guide_cents;
    Ok(CostReport {
        pricing: *pricing,
        tokens_per_word: TOKENS_PER_WORD,
        rounding_rule: ROUNDING_RULE.to_string(),
        per_persona,
        panel_cents,
        guide_cents,
        total_cents,
        headline_dollars: total_cents.div_ceil(100),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persona::ExpertPersona;

    fn conv_with(id: &str, input: u32, output: u32) -> Conversation {
        let mut c = Conversation::new(&ExpertPersona::expert(id, None, "d", "i"));
        c.push_exchange("q".into(), input, "a".into(), output);
        c
    }

    #[test]
    fn one_expert_at_blended_rate() {
        let p = Pricing::blended(0.10);
        assert_eq!(p.cents(2000, 2350).unwrap(), 44);
        assert_eq!(p.cents(0, 0).unwrap(), 0);
    }

    #[test]
    fn seven_experts_and_a_guide() {
        let mut convs: Vec<Conversation> = (0..7)
            .map(|i| conv_with(&format!("e{i}"), 1500, 2850))
            .collect();
        convs.push(conv_with("ahp-guide", 300, 900));
        let report = estimate_cost(
            &convs,
            |id| {
                Some(if id == "ahp-guide" {
                    Role::Guide
                } else {
                    Role::Expert
                })
            },
            &Pricing::blended(0.10),
        )
        .unwrap();
        assert!(report.expert_costs().all(|p| p.cents == 44));
        assert_eq!(report.panel_cents, 308);
        assert_eq!(report.guide_cents, 12);
        assert_eq!(report.headline_dollars, 4);
        assert_eq!(format_cents(report.panel_cents), "$3.08");
    }

    #[test]
    fn split_rates_and_missing_pricing() {
        let p = Pricing {
            input_per_1k: Some(0.06),
            output_per_1k: Some(0.12),
            blended_per_1k: None,
        };
        // 1000 * 0.06 + 1000 * 0.12 = 0.18
        assert_eq!(p.cents(1000, 1000).unwrap(), 18);
        let empty = estimate_cost(std::iter::empty(), |_| None, &Pricing::blended(0.1)).unwrap();
        assert_eq!((empty.total_cents, empty.headline_dollars), (0, 0));
        assert_eq!(
            estimate_cost(std::iter::empty(), |_| None, &Pricing::default()),
            Err(CostError::MissingPricing)
        );
        assert_eq!(
            Pricing::blended(-1.0).cents(1, 1),
            Err(CostError::InvalidPrice(-1.0))
        );
    }

    #[test]
    fn half_cent_rounds_up() {
        // 50 tokens at $0.10/1k is exactly half a cent.
        assert_eq!(Pricing::blended(0.10).cents(50, 0).unwrap(), 1);
        assert_eq!(Pricing::blended(0.10).cents(49, 0).unwrap(), 0);
    }
}
