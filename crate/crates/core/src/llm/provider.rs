//! Judge-model providers: the wire client and a scriptable stub.

use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned status {status}")]
    Http { status: u16 },
    #[error("malformed provider response: {0}")]
    BadResponse(String),
}

impl ProviderError {
    /// Transport failures and throttling/server statuses are worth a
    /// retry; client errors are not.
    pub fn retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) => true,
            ProviderError::Http { status } => *status == 429 || *status >= 500,
            ProviderError::BadResponse(_) => false,
        }
    }
}

fn default_endpoint() -> String {
    "http://localhost:8000/v1/chat/completions".to_string()
}
fn default_model() -> String {
    "qwen3-8b".to_string()
}
fn default_key_env() -> String {
    "JUDGEKIT_API_KEY".to_string()
}
fn default_retries() -> u32 {
    2
}
fn default_timeout() -> u64 {
    60
}
fn default_concurrent() -> usize {
    4
}
fn default_backoff() -> u64 {
    250
}

/// Connection settings for the judge-model endpoint. The API key is read
/// from the named environment variable and never logged or persisted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderConfig {
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    #[serde(default = "default_model")]
    pub model_id: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_concurrent")]
    pub max_concurrent: usize,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: default_endpoint(),
            model_id: default_model(),
            api_key_env: default_key_env(),
            max_retries: default_retries(),
            timeout_secs: default_timeout(),
            max_concurrent: default_concurrent(),
            temperature: 0.0,
            backoff_ms: default_backoff(),
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_concurrent < 1 {
            return Err("max_concurrent must be at least 1".into());
        }
        Ok(())
    }
}

/// A completion backend; implementations must be shareable across the
/// fetcher's worker threads.
pub trait JudgeProvider: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;
}

/// Client for any chat-completions endpoint speaking the
/// `{model, messages, temperature}` / `{choices:[{message:{content}}]}`
/// shape.
pub struct HttpProvider {
    config: ProviderConfig,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> HttpProvider {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpProvider { config, agent }
    }
}

impl JudgeProvider for HttpProvider {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let body = serde_json::json!({
            "model": self.config.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        });
        let mut request = self.agent.post(&self.config.endpoint);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            if !key.is_empty() {
                request = request.header("Authorization", &format!("Bearer {key}"));
            }
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        if status != 200 {
            return Err(ProviderError::Http { status });
        }
        let value: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                ProviderError::BadResponse("no choices[0].message.content in response".into())
            })
    }
}

/// Scripted provider for tests and offline experiments: replays canned
/// responses in order, repeating the last one, and counts calls.
pub struct StubProvider {
    responses: Vec<Result<String, String>>,
    calls: AtomicUsize,
}

impl StubProvider {
    pub fn new(responses: Vec<Result<String, String>>) -> StubProvider {
        StubProvider {
            responses,
            calls: AtomicUsize::new(0),
        }
    }

    /// A stub that always returns the same body.
    pub fn constant(body: &str) -> StubProvider {
        StubProvider::new(vec![Ok(body.to_string())])
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl JudgeProvider for StubProvider {
    fn complete(&self, _prompt: &str) -> Result<String, ProviderError> {
        let idx = self.calls.fetch_add(1, Ordering::SeqCst);
        let entry = self
            .responses
            .get(idx.min(self.responses.len().saturating_sub(1)))
            .cloned()
            .unwrap_or(Err("stub has no responses".to_string()));
        entry.map_err(ProviderError::Transport)
    }
}
