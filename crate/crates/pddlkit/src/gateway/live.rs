//! OpenAI-compatible chat-completion client with retry and backoff.

use std::time::Duration;

use log::{debug, warn};
use serde_json::{json, Value};

use pddlkit_core::llm::{Completion, CompletionRequest, LanguageModel, LlmConfig, LlmError, Usage};

/// Status line, body and `Retry-After` of one HTTP exchange.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
    pub retry_after: Option<Duration>,
}

impl HttpReply {
    pub fn new(status: u16, body: impl Into<String>) -> Self {
        HttpReply {
            status,
            body: body.into(),
            retry_after: None,
        }
    }
}

/// Connection-level failure: DNS, TLS, reset, timeout.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TransportFault(pub String);

/// The wire. Swapped out in tests to inject faults.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: &str, body: &str) -> Result<HttpReply, TransportFault>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        UreqTransport::new(Duration::from_secs(120))
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, bearer: &str, body: &str) -> Result<HttpReply, TransportFault> {
        let mut resp = self
            .agent
            .post(url)
            .header("Authorization", &format!("Bearer {bearer}"))
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| TransportFault(e.to_string()))?;
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportFault(e.to_string()))?;
        Ok(HttpReply {
            status,
            body,
            retry_after,
        })
    }
}

enum Attempt {
    Done(String, Usage),
    Retry(String, Option<Duration>),
    Fatal(LlmError),
}

pub struct LiveModel<T = UreqTransport> {
    config: LlmConfig,
    api_key: String,
    transport: T,
    sleep: fn(Duration),
}

impl LiveModel<UreqTransport> {
    /// Reads the key from the environment variable named by the config.
    pub fn from_env(config: LlmConfig) -> Result<Self, LlmError> {
        let var = config.api_key_env.clone();
        let key = std::env::var(&var)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| LlmError::Auth(format!("environment variable `{var}` is not set")))?;
        Ok(LiveModel::with_transport(
            config,
            key,
            UreqTransport::default(),
        ))
    }
}

impl<T: Transport> LiveModel<T> {
    pub fn with_transport(config: LlmConfig, api_key: String, transport: T) -> Self {
        LiveModel {
            config,
            api_key,
            transport,
            sleep: std::thread::sleep,
        }
    }

    /// Replaces the backoff sleep; tests pass a no-op.
    pub fn with_sleep(mut self, sleep: fn(Duration)) -> Self {
        self.sleep = sleep;
        self
    }

    fn body(&self, prompt: &str) -> String {
        json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        })
        .to_string()
    }

    fn attempt(&self, body: &str) -> Attempt {
        let reply = match self
            .transport
            .post_json(&self.config.endpoint, &self.api_key, body)
        {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.0, None),
        };
        match reply.status {
            200..=299 => match parse_reply(&reply.body) {
                Ok((text, usage)) => Attempt::Done(text, usage),
                Err(e) => Attempt::Fatal(e),
            },
            401 | 403 => Attempt::Fatal(LlmError::Auth(format!(
                "HTTP {}: {}",
                reply.status,
                snippet(&reply.body)
            ))),
            408 | 429 | 500..=599 => Attempt::Retry(
                format!("HTTP {}: {}", reply.status, snippet(&reply.body)),
                reply.retry_after,
            ),
            s => Attempt::Fatal(LlmError::Protocol(format!(
                "HTTP {s}: {}",
                snippet(&reply.body)
            ))),
        }
    }
}

fn snippet(body: &str) -> String {
    let t = body.trim();
    match t.char_indices().nth(200) {
        Some((i, _)) => format!("{}...", &t[..i]),
        None => t.to_string(),
    }
}

/// Text and token counts of a chat-completion response body.
pub fn parse_reply(body: &str) -> Result<(String, Usage), LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::Protocol(e.to_string()))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::Protocol("response has no choices[0].message.content".into()))?;
    let count = |k: &str| {
        v.pointer(&format!("/usage/{k}"))
            .and_then(Value::as_u64)
            .unwrap_or(0)
    };
    let usage = Usage {
        prompt_tokens: count("prompt_tokens"),
        completion_tokens: count("completion_tokens"),
        attempts: 1,
    };
    Ok((text.to_string(), usage))
}

impl<T: Transport> LanguageModel for LiveModel<T> {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        let body = self.body(&request.prompt);
        let policy = self.config.retry;
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Attempt::Done(text, mut usage) => {
                    usage.attempts = attempts;
                    return Ok(Completion {
                        text,
                        usage,
                        backend: "live".into(),
                    });
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(message, hint) => {
                    if attempts > policy.retries {
                        return Err(LlmError::Transport { attempts, message });
                    }
                    let backoff = Duration::from_millis(policy.backoff_ms(attempts));
                    let wait = hint.map_or(backoff, |h| {
                        h.min(Duration::from_millis(policy.max_backoff_ms))
                            .max(backoff)
                    });
                    warn!(
                        "{}: attempt {attempts} failed ({message}); retrying in {wait:?}",
                        request.key
                    );
                    (self.sleep)(wait);
                }
            }
            debug!("{}: attempt {} starting", request.key, attempts + 1);
        }
    }
}
