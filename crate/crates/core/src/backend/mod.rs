//! Uniform text-completion interface with two implementations: an HTTP
//! chat-completions client and a deterministic scripted backend for offline
//! play and tests.

mod http;
mod scripted;

pub use http::HttpBackend;
pub use scripted::ScriptedBackend;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// What a completion is for; routes to a configured model and default
/// sampling temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Talk,
    Summary,
    VoteDeclaration,
    TargetDecision,
    AttackDecision,
}

impl Purpose {
    pub fn as_str(self) -> &'static str {
        match self {
            Purpose::Talk => "talk",
            Purpose::Summary => "summary",
            Purpose::VoteDeclaration => "vote_declaration",
            Purpose::TargetDecision => "target_decision",
            Purpose::AttackDecision => "attack_decision",
        }
    }

    /// Decisions are sampled greedily; talk keeps some variety.
    pub fn default_temperature(self) -> f32 {
        match self {
            Purpose::Talk | Purpose::VoteDeclaration => 0.7,
            Purpose::Summary => 0.3,
            Purpose::TargetDecision | Purpose::AttackDecision => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub prompt_text: String,
    pub max_tokens: u32,
    pub temperature: f32,
    /// Explicit model override; when `None` the backend routes by purpose.
    pub model_id: Option<String>,
    pub purpose: Purpose,
}

impl CompletionRequest {
    pub fn new(purpose: Purpose, prompt_text: impl Into<String>) -> CompletionRequest {
        CompletionRequest {
            prompt_text: prompt_text.into(),
            max_tokens: 512,
            temperature: purpose.default_temperature(),
            model_id: None,
            purpose,
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend failure: {0}")]
    Failure(String),
    #[error("backend configuration error: {0}")]
    Config(String),
}

/// Per-purpose model routing with a default fallback.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelMap {
    pub default: String,
    #[serde(default)]
    pub per_purpose: BTreeMap<Purpose, String>,
}

impl ModelMap {
    pub fn uniform(model: impl Into<String>) -> ModelMap {
        ModelMap {
            default: model.into(),
            per_purpose: BTreeMap::new(),
        }
    }

    pub fn model_for(&self, purpose: Purpose) -> &str {
        self.per_purpose.get(&purpose).unwrap_or(&self.default)
    }
}

/// HTTP backend settings. The API key is read from the named environment
/// variable at request time and never stored or logged.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BackendConfig {
    pub base_url: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    pub models: ModelMap,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_retry_count")]
    pub retry_count: u32,
    #[serde(default = "default_retry_backoff_ms")]
    pub retry_backoff_ms: u64,
}

fn default_api_key_env() -> String {
    "LYCAN_API_KEY".to_string()
}

fn default_timeout_secs() -> u64 {
    30
}

fn default_retry_count() -> u32 {
    2
}

fn default_retry_backoff_ms() -> u64 {
    500
}

impl BackendConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn retry_backoff(&self) -> Duration {
        Duration::from_millis(self.retry_backoff_ms)
    }
}

/// A text-completion source. Shareable across agents; calls may run
/// concurrently and are individually timed out by the implementation.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn purpose_routing_prefers_specific_model() {
        let mut map = ModelMap::uniform("model-b");
        map.per_purpose
            .insert(Purpose::VoteDeclaration, "model-a".to_string());
        assert_eq!(map.model_for(Purpose::VoteDeclaration), "model-a");
        assert_eq!(map.model_for(Purpose::Talk), "model-b");
    }

    #[test]
    fn decision_purposes_sample_greedily() {
        assert_eq!(Purpose::TargetDecision.default_temperature(), 0.0);
        assert_eq!(Purpose::AttackDecision.default_temperature(), 0.0);
        assert_eq!(Purpose::Talk.default_temperature(), 0.7);
    }
}
