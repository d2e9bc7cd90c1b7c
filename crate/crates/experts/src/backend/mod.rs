//! Conversation backends: live chat-completion endpoint, transcript replay,
//! and deterministic scripted responders.

mod live;
mod replay;
mod scripted;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conversation::{estimate_tokens, ContextBudget, Conversation};
use crate::persona::ExpertPersona;
use crate::prompt::Prompt;

pub use live::{LiveBackend, LiveConfig, RateLimiter};
pub use replay::{
    prompt_hash, transcript_from_conversations, ReplayBackend, TokenCounts, TranscriptEntry,
};
pub use scripted::{stable_hash, Responder, ScriptRule, ScriptedBackend, SyntheticExpert};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Replay,
    Scripted,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Live => "live",
            Self::Replay => "replay",
            Self::Scripted => "scripted",
        })
    }
}

impl FromStr for BackendKind {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(Self::Live),
            "replay" => Ok(Self::Replay),
            "scripted" => Ok(Self::Scripted),
            other => Err(BackendError::Config(format!(
                "unknown backend kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("transport failure: {message}")]
    Transport { message: String, retriable: bool },
    #[error("replay divergence for {persona} at exchange {exchange}: recorded prompt hash {expected}, got {actual}")]
    ReplayDivergence {
        persona: String,
        exchange: usize,
        expected: String,
        actual: String,
    },
    #[error("replay transcript has no exchange {exchange} for {persona}")]
    ReplayExhausted { persona: String, exchange: usize },
    #[error("context budget exceeded: {used} tokens in context + {requested} outgoing > {budget}")]
    ContextBudgetExceeded {
        used: u64,
        requested: u32,
        budget: u32,
    },
    #[error("missing credential: environment variable {0} is not set")]
    MissingCredential(String),
    #[error("scripted backend has no reply for {persona}")]
    NoScriptedReply { persona: String },
    #[error("backend configuration: {0}")]
    Config(String),
}

impl BackendError {
    pub fn is_retriable(&self) -> bool {
        matches!(
            self,
            Self::Transport {
                retriable: true,
                ..
            }
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt: Option<u32>,
    pub reply: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub usage: TokenUsage,
}

impl Completion {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            usage: TokenUsage::default(),
        }
    }
}

/// One model behind a persona. `conversation` is the history before this
/// exchange; `prompt.text` is exactly what is sent.
pub trait ExpertBackend: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn complete(
        &self,
        persona: &ExpertPersona,
        conversation: &Conversation,
        prompt: &Prompt,
    ) -> Result<Completion, BackendError>;
}

/// Sends one message and appends the exchange. The budget is checked before
/// anything is sent; on any error the conversation is unchanged.
pub fn converse(
    backend: &dyn ExpertBackend,
    persona: &ExpertPersona,
    conversation: &mut Conversation,
    prompt: &Prompt,
    budget: &ContextBudget,
) -> Result<String, BackendError> {
    debug_assert_eq!(persona.id, conversation.persona);
    let outgoing = Prompt {
        text: conversation.outgoing_text(&prompt.text),
        intent: prompt.intent.clone(),
    };
    let estimate = estimate_tokens(&outgoing.text);
    if budget.would_exceed(conversation, estimate) {
        return Err(BackendError::ContextBudgetExceeded {
            used: conversation.cumulative_tokens(),
            requested: estimate,
            budget: budget.max_tokens,
        });
    }
    let completion = backend.complete(persona, conversation, &outgoing)?;
    let sent_tokens = completion.usage.prompt.unwrap_or(estimate);
    let reply_tokens = completion
        .usage
        .reply
        .unwrap_or_else(|| estimate_tokens(&completion.text));
    conversation.push_exchange(
        outgoing.text,
        sent_tokens,
        completion.text.clone(),
        reply_tokens,
    );
    Ok(completion.text)
}
