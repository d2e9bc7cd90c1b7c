use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendError, BackendKind, Completion, ExpertBackend, TokenUsage};
use crate::conversation::{Author, Conversation};
use crate::persona::ExpertPersona;
use crate::prompt::Prompt;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub prompt: u32,
    pub reply: u32,
}

/// One recorded exchange. `exchange` counts from 0 across all of the
/// persona's conversations, including rotated ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub persona: String,
    pub exchange: usize,
    pub prompt_hash: String,
    pub prompt: String,
    pub reply: String,
    pub token_counts: TokenCounts,
}

/// Hex SHA-256 of the exact prompt text.
pub fn prompt_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Serves recorded replies. Any prompt whose hash differs from the
/// recording is a hard error.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    entries: HashMap<(String, usize), TranscriptEntry>,
}

impl ReplayBackend {
    pub fn new(entries: Vec<TranscriptEntry>) -> Result<Self, BackendError> {
        let mut map = HashMap::with_capacity(entries.len());
        for e in entries {
            let key = (e.persona.clone(), e.exchange);
            if map.insert(key, e).is_some() {
                return Err(BackendError::Config(
                    "transcript records the same exchange twice".into(),
                ));
            }
        }
        Ok(Self { entries: map })
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            BackendError::Config(format!("reading transcript {}: {e}", path.display()))
        })?;
        let entries: Vec<TranscriptEntry> = serde_json::from_str(&text)
            .map_err(|e| BackendError::Config(format!("transcript {}: {e}", path.display())))?;
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ExpertBackend for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn complete(
        &self,
        persona: &ExpertPersona,
        conversation: &Conversation,
        prompt: &Prompt,
    ) -> Result<Completion, BackendError> {
        let exchange = conversation.global_exchange_index();
        let entry = self
            .entries
            .get(&(persona.id.clone(), exchange))
            .ok_or_else(|| BackendError::ReplayExhausted {
                persona: persona.id.clone(),
                exchange,
            })?;
        let actual = prompt_hash(&prompt.text);
        if actual != entry.prompt_hash {
            return Err(BackendError::ReplayDivergence {
                persona: persona.id.clone(),
                exchange,
                expected: entry.prompt_hash.clone(),
                actual,
            });
        }
        Ok(Completion {
            text: entry.reply.clone(),
            usage: TokenUsage {
                prompt: Some(entry.token_counts.prompt),
                reply: Some(entry.token_counts.reply),
            },
        })
    }
}

/// Flattens archived conversations into a transcript, ordered by persona
/// then exchange.
pub fn transcript_from_conversations<'a>(
    conversations: impl IntoIterator<Item = &'a Conversation>,
) -> Vec<TranscriptEntry> {
    let mut out = Vec::new();
    for conv in conversations {
        for (k, pair) in conv.messages.chunks_exact(2).enumerate() {
            debug_assert!(pair[0].author == Author::User && pair[1].author == Author::Expert);
            out.push(TranscriptEntry {
                persona: conv.persona.clone(),
                exchange: conv.prior_exchanges + k,
                prompt_hash: prompt_hash(&pair[0].text),
                prompt: pair[0].text.clone(),
                reply: pair[1].text.clone(),
                token_counts: TokenCounts {
                    prompt: pair[0].token_estimate,
                    reply: pair[1].token_estimate,
                },
            });
        }
    }
    out.sort_by(|a, b| (&a.persona, a.exchange).cmp(&(&b.persona, b.exchange)));
    out
}
