//! Provider-agnostic completion interface, prompt templates and extraction of
//! marked sections from free-form completions.

mod sections;
mod template;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

pub use sections::{extract_sections, headings, SectionError, Sections};
pub use template::{render_predicate_list, Bindings, PromptTemplate, TemplateError, PLACEHOLDERS};

/// One prompt addressed by a stable key. Replay backends look the key up;
/// live backends ignore it except for logging.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub key: String,
    pub prompt: String,
}

impl CompletionRequest {
    pub fn new(key: impl Into<String>, prompt: impl Into<String>) -> Self {
        CompletionRequest {
            key: key.into(),
            prompt: prompt.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Transport attempts, including the successful one.
    pub attempts: u32,
}

impl Usage {
    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
    /// `live` or `fixture:<key>`.
    pub backend: String,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("token budget exceeded: {used} of {limit}")]
    BudgetExceeded { used: u64, limit: u64 },
    #[error("no fixture for key `{key}`")]
    MissingFixture { key: String },
    #[error("malformed response: {0}")]
    Protocol(String),
}

/// Anything that turns a prompt into text. Implementations must be shareable
/// across threads so candidate builds can run concurrently.
pub trait LanguageModel: Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError>;
}

impl<M: LanguageModel + ?Sized> LanguageModel for &M {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        (**self).complete(request)
    }
}

/// In-memory replay store: key → completion text.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReplayModel {
    entries: BTreeMap<String, String>,
}

impl ReplayModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, text: impl Into<String>) {
        self.entries.insert(key.into(), text.into());
    }

    pub fn with(mut self, key: impl Into<String>, text: impl Into<String>) -> Self {
        self.insert(key, text);
        self
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<(String, String)> for ReplayModel {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        ReplayModel {
            entries: iter.into_iter().collect(),
        }
    }
}

impl LanguageModel for ReplayModel {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        let text = self
            .entries
            .get(&request.key)
            .ok_or_else(|| LlmError::MissingFixture {
                key: request.key.clone(),
            })?;
        Ok(Completion {
            text: text.clone(),
            usage: Usage {
                prompt_tokens: 0,
                completion_tokens: 0,
                attempts: 1,
            },
            backend: format!("fixture:{}", request.key),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub retries: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: f64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 2,
            initial_backoff_ms: 500,
            multiplier: 2.0,
            max_backoff_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `n` (1-based).
    pub fn backoff_ms(&self, n: u32) -> u64 {
        let mut d = self.initial_backoff_ms as f64;
        for _ in 1..n {
            d *= self.multiplier;
        }
        (d as u64).min(self.max_backoff_ms)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub retry: RetryPolicy,
    /// Environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: String::from("https://api.openai.com/v1/chat/completions"),
            model: String::from("gpt-4o-mini"),
            temperature: 0.0,
            max_tokens: 2048,
            retry: RetryPolicy::default(),
            api_key_env: String::from("LLM_API_KEY"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid LLM configuration: {0}")]
pub struct ConfigError(pub String);

impl LlmConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ConfigError(format!(
                "temperature {} is outside [0, 2]",
                self.temperature
            )));
        }
        if self.endpoint.is_empty() {
            return Err(ConfigError("endpoint is empty".into()));
        }
        if self.api_key_env.is_empty() {
            return Err(ConfigError("api_key_env is empty".into()));
        }
        if self.retry.multiplier < 1.0 {
            return Err(ConfigError("retry multiplier must be at least 1".into()));
        }
        Ok(())
    }
}
