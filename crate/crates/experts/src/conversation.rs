//! Append-only chat transcripts with token accounting.

use serde::{Deserialize, Serialize};

use crate::persona::ExpertPersona;

/// Tokens per word used when a backend reports no counts
/// (5,800 words is roughly 4,350 tokens).
pub const TOKENS_PER_WORD: f64 = 0.75;

pub const DEFAULT_CONTEXT_BUDGET: u32 = 8192;
pub const DEFAULT_ROTATE_FRACTION: f64 = 0.9;

/// `ceil(words * 0.75)` in integer arithmetic.
pub fn estimate_tokens(text: &str) -> u32 {
    let words = text.split_whitespace().count() as u64;
    ((words * 3).div_ceil(4)) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Author {
    User,
    Expert,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub author: Author,
    pub text: String,
    pub token_estimate: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub persona: String,
    pub system: String,
    pub system_tokens: u32,
    pub messages: Vec<Message>,
    /// Carry-over text prepended to the next user message after a rotation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preamble: Option<String>,
    /// Exchanges completed in this persona's earlier, archived conversations.
    #[serde(default)]
    pub prior_exchanges: usize,
}

impl Conversation {
    pub fn new(persona: &ExpertPersona) -> Self {
        Self {
            persona: persona.id.clone(),
            system: persona.instructions.clone(),
            system_tokens: estimate_tokens(&persona.instructions),
            messages: Vec::new(),
            preamble: None,
            prior_exchanges: 0,
        }
    }

    /// Completed user/expert exchanges in this conversation.
    pub fn exchanges(&self) -> usize {
        self.messages.len() / 2
    }

    /// Exchanges across this persona's whole history, including archived conversations.
    pub fn global_exchange_index(&self) -> usize {
        self.prior_exchanges + self.exchanges()
    }

    /// Message tokens only (what the cost model bills).
    pub fn message_tokens(&self) -> u64 {
        self.messages
            .iter()
            .map(|m| u64::from(m.token_estimate))
            .sum()
    }

    pub fn tokens_by_author(&self, author: Author) -> u64 {
        self.messages
            .iter()
            .filter(|m| m.author == author)
            .map(|m| u64::from(m.token_estimate))
            .sum()
    }

    /// Context occupancy: system instructions plus every message.
    pub fn cumulative_tokens(&self) -> u64 {
        u64::from(self.system_tokens) + self.message_tokens()
    }

    /// Text actually sent for `message`, with any pending preamble attached.
    pub fn outgoing_text(&self, message: &str) -> String {
        match &self.preamble {
            Some(p) if !p.is_empty() => format!("{p}\n\n{message}"),
            _ => message.to_string(),
        }
    }

    /// Records one exchange. Keeps the strict user/expert alternation.
    pub fn push_exchange(
        &mut self,
        sent: String,
        sent_tokens: u32,
        reply: String,
        reply_tokens: u32,
    ) {
        debug_assert!(self.messages.len().is_multiple_of(2));
        self.messages.push(Message {
            author: Author::User,
            text: sent,
            token_estimate: sent_tokens,
        });
        self.messages.push(Message {
            author: Author::Expert,
            text: reply,
            token_estimate: reply_tokens,
        });
        self.preamble = None;
    }

    pub fn last_reply(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.author == Author::Expert)
            .map(|m| m.text.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextBudget {
    pub max_tokens: u32,
    /// Occupancy fraction at which callers should rotate proactively.
    pub rotate_fraction: f64,
}

impl Default for ContextBudget {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_CONTEXT_BUDGET,
            rotate_fraction: DEFAULT_ROTATE_FRACTION,
        }
    }
}

impl ContextBudget {
    pub fn would_exceed(&self, conversation: &Conversation, outgoing_tokens: u32) -> bool {
        conversation.cumulative_tokens() + u64::from(outgoing_tokens) > u64::from(self.max_tokens)
    }

    pub fn should_rotate(&self, conversation: &Conversation) -> bool {
        conversation.cumulative_tokens() as f64 >= self.rotate_fraction * f64::from(self.max_tokens)
    }
}

/// Starts a fresh conversation for the same persona. The caller archives
/// `old`; `carryover` (a summary of committed decisions) is sent ahead of
/// the next message.
pub fn rotate_conversation(old: &Conversation, carryover: &str) -> Conversation {
    Conversation {
        persona: old.persona.clone(),
        system: old.system.clone(),
        system_tokens: old.system_tokens,
        messages: Vec::new(),
        preamble: (!carryover.trim().is_empty()).then(|| carryover.to_string()),
        prior_exchanges: old.global_exchange_index(),
    }
}
