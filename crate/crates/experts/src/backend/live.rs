use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{BackendError, BackendKind, Completion, ExpertBackend, TokenUsage};
use crate::conversation::{Author, Conversation};
use crate::persona::ExpertPersona;
use crate::prompt::Prompt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveConfig {
    /// Full URL of the chat-completion endpoint.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    /// Minimum spacing between requests across all threads.
    pub min_interval_ms: u64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 120,
            max_retries: 3,
            initial_backoff_ms: 1000,
            min_interval_ms: 0,
        }
    }
}

/// Serializes request starts so they are at least `interval` apart.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(interval: Duration) -> Self {
        Self {
            interval,
            last: Mutex::new(None),
        }
    }

    pub fn acquire(&self) {
        let mut last = self.last.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(prev) = *last {
            let ready = prev + self.interval;
            let now = Instant::now();
            if ready > now {
                thread::sleep(ready - now);
            }
        }
        *last = Some(Instant::now());
    }
}

/// Blocking client for an OpenAI-style chat-completion endpoint.
pub struct LiveBackend {
    config: LiveConfig,
    api_key: String,
    agent: ureq::Agent,
    limiter: RateLimiter,
}

impl LiveBackend {
    /// Reads the key from the configured environment variable.
    pub fn new(config: LiveConfig) -> Result<Self, BackendError> {
        let key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| BackendError::MissingCredential(config.api_key_env.clone()))?;
        Ok(Self::with_api_key(config, key))
    }

    pub fn with_api_key(config: LiveConfig, api_key: String) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(true)
            .build()
            .into();
        let limiter = RateLimiter::new(Duration::from_millis(config.min_interval_ms));
        Self {
            config,
            api_key,
            agent,
            limiter,
        }
    }

    /// System message, then the history, then the new user message.
    pub fn request_body(
        &self,
        persona: &ExpertPersona,
        conversation: &Conversation,
        prompt: &Prompt,
    ) -> Value {
        let mut messages = vec![json!({"role": "system", "content": persona.instructions})];
        for m in &conversation.messages {
            let role = match m.author {
                Author::User => "user",
                Author::Expert => "assistant",
            };
            messages.push(json!({"role": role, "content": m.text}));
        }
        messages.push(json!({"role": "user", "content": prompt.text}));
        json!({"model": self.config.model, "messages": messages})
    }

    fn send_once(&self, body: &Value) -> Result<Completion, BackendError> {
        self.limiter.acquire();
        let mut response = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(transport_error)?;
        let value: Value = response.body_mut().read_json().map_err(transport_error)?;
        parse_completion(&value)
    }
}

fn transport_error(err: ureq::Error) -> BackendError {
    let retriable = match &err {
        ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
        ureq::Error::Io(_)
        | ureq::Error::Timeout(_)
        | ureq::Error::ConnectionFailed
        | ureq::Error::HostNotFound => true,
        _ => false,
    };
    BackendError::Transport {
        message: err.to_string(),
        retriable,
    }
}

fn parse_completion(value: &Value) -> Result<Completion, BackendError> {
    let text = value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::Transport {
            message: "response has no assistant message".into(),
            retriable: false,
        })?;
    let reply = value
        .pointer("/usage/completion_tokens")
        .and_then(Value::as_u64)
        .map(|t| t as u32);
    // The endpoint's prompt count covers the whole context, not this message.
    Ok(Completion {
        text: text.to_string(),
        usage: TokenUsage {
            prompt: None,
            reply,
        },
    })
}

impl ExpertBackend for LiveBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }

    fn complete(
        &self,
        persona: &ExpertPersona,
        conversation: &Conversation,
        prompt: &Prompt,
    ) -> Result<Completion, BackendError> {
        let body = self.request_body(persona, conversation, prompt);
        let mut backoff = Duration::from_millis(self.config.initial_backoff_ms);
        let mut attempt = 0;
        loop {
            match self.send_once(&body) {
                Err(e) if e.is_retriable() && attempt < self.config.max_retries => {
                    log::warn!(
                        "attempt {} for {} failed: {e}; retrying",
                        attempt + 1,
                        persona.id
                    );
                    thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    /// Serves the given (status, body) pairs in order, one per connection,
    /// and forwards each request body.
    fn mock_server(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; length];
                reader.read_exact(&mut buf).unwrap();
                tx.send(String::from_utf8(buf).unwrap()).unwrap();
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (url, rx)
    }

    fn config(endpoint: String) -> LiveConfig {
        LiveConfig {
            endpoint,
            initial_backoff_ms: 1,
            timeout_secs: 10,
            ..LiveConfig::default()
        }
    }

    const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"pong"}}],"usage":{"prompt_tokens":40,"completion_tokens":2}}"#;

    #[test]
    fn retries_transient_failures_then_succeeds() {
        let (url, rx) = mock_server(vec![
            (503, "{}".into()),
            (429, "{}".into()),
            (200, OK.into()),
        ]);
        let backend = LiveBackend::with_api_key(config(url), "k".into());
        let persona = ExpertPersona::expert("Ann", None, "d", "be brief");
        let mut conv = Conversation::new(&persona);
        conv.push_exchange("hi".into(), 1, "hello".into(), 1);
        let out = backend
            .complete(&persona, &conv, &Prompt::freeform("ping"))
            .unwrap();
        assert_eq!(out.text, "pong");
        assert_eq!(out.usage.reply, Some(2));
        let sent: Value = serde_json::from_str(&rx.recv().unwrap()).unwrap();
        let roles: Vec<&str> = sent["messages"]
            .as_array()
            .unwrap()
            .iter()
            .map(|m| m["role"].as_str().unwrap())
            .collect();
        assert_eq!(roles, ["system", "user", "assistant", "user"]);
        assert_eq!(sent["messages"][0]["content"], "be brief");
    }

    #[test]
    fn gives_up_after_retry_budget() {
        let (url, _rx) = mock_server(vec![(500, "{}".into()); 4]);
        let backend = LiveBackend::with_api_key(config(url), "k".into());
        let persona = ExpertPersona::expert("Ann", None, "d", "i");
        let err = backend
            .complete(
                &persona,
                &Conversation::new(&persona),
                &Prompt::freeform("x"),
            )
            .unwrap_err();
        assert!(err.is_retriable());
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, _rx) = mock_server(vec![(400, "{}".into())]);
        let backend = LiveBackend::with_api_key(config(url), "k".into());
        let persona = ExpertPersona::expert("Ann", None, "d", "i");
        let err = backend
            .complete(
                &persona,
                &Conversation::new(&persona),
                &Prompt::freeform("x"),
            )
            .unwrap_err();
        assert!(matches!(
            err,
            BackendError::Transport {
                retriable: false,
                ..
            }
        ));
    }

    #[test]
    fn missing_credential() {
        let cfg = LiveConfig {
            api_key_env: "AHP_TEST_SURELY_UNSET_KEY".into(),
            ..LiveConfig::default()
        };
        assert_eq!(
            LiveBackend::new(cfg).err(),
            Some(BackendError::MissingCredential(
                "AHP_TEST_SURELY_UNSET_KEY".into()
            ))
        );
    }
}
