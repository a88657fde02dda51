//! Delivery of prompts to chat-completion providers.
//!
//! A [`Gateway`] wraps one provider configuration and a [`Backend`]: the
//! live HTTP client, a replay store of recorded responses, or anything else
//! that turns a request into response text. The gateway adds the in-flight
//! limit, latency measurement, refusal detection, and optional recording.

mod http;
mod limiter;
mod refusal;
mod replay;

use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompt::PromptBundle;
use crate::reasoning::EmotionWeight;

pub use http::HttpBackend;
pub use limiter::InFlightLimiter;
pub use refusal::{detect_refusal, RefusalDetector, DEFAULT_REFUSAL_PHRASES};
pub use replay::{FixtureStore, ReplayBackend};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("request timed out")]
    Timeout,
    #[error("HTTP {status}: {body}")]
    HttpError { status: u16, body: String },
    #[error("authentication: {0}")]
    AuthError(String),
    #[error("transport: {0}")]
    TransportError(String),
    #[error("invalid provider response: {0}")]
    InvalidResponse(String),
    #[error("no recorded response for key {0}")]
    FixtureMissing(String),
    #[error("provider config: {0}")]
    Config(String),
    #[error("fixture store {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl GatewayError {
    /// Whether the live client should try again.
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Timeout | GatewayError::TransportError(_) => true,
            GatewayError::HttpError { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

fn default_timeout() -> u64 {
    120
}
fn default_retries() -> u32 {
    2
}
fn default_in_flight() -> usize {
    2
}
fn default_backoff() -> u64 {
    500
}

/// One provider entry of a providers file. The API key itself is read from
/// the environment variable named by `api_key_env` at request time and is
/// never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub name: String,
    pub base_url: String,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_backoff")]
    pub retry_backoff_ms: u64,
}

impl ProviderConfig {
    pub fn new(name: &str, base_url: &str, model_id: &str) -> Self {
        ProviderConfig {
            name: name.into(),
            base_url: base_url.into(),
            model_id: model_id.into(),
            api_key_env: None,
            temperature: 0.0,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            max_in_flight: default_in_flight(),
            retry_backoff_ms: default_backoff(),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: String| Err(GatewayError::Config(format!("provider {:?}: {m}", self.name)));
        if self.name.trim().is_empty() || self.name.chars().any(|c| c.is_whitespace() || c == ',') {
            return bad("name must be nonempty without spaces or commas".into());
        }
        if self.model_id.trim().is_empty() {
            return bad("model_id is empty".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad(format!("temperature {} must be >= 0", self.temperature));
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be >= 1".into());
        }
        if let Some(var) = &self.api_key_env {
            let ok = !var.is_empty()
                && !var.starts_with(|c: char| c.is_ascii_digit())
                && var.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ok {
                return bad(format!("api_key_env {var:?} is not an environment variable name"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProvidersFile {
    providers: Vec<ProviderConfig>,
}

/// Reads a TOML providers file (`[[providers]]` tables).
pub fn load_providers(path: &Path) -> Result<Vec<ProviderConfig>, GatewayError> {
    let text = std::fs::read_to_string(path).map_err(|source| GatewayError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_providers(&text)
}

pub fn parse_providers(text: &str) -> Result<Vec<ProviderConfig>, GatewayError> {
    let file: ProvidersFile = toml::from_str(text).map_err(|e| GatewayError::Config(e.to_string()))?;
    let mut names = std::collections::HashSet::new();
    for p in &file.providers {
        p.validate()?;
        if !names.insert(p.name.as_str()) {
            return Err(GatewayError::Config(format!("duplicate provider name {:?}", p.name)));
        }
    }
    Ok(file.providers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn from_prompt(config: &ProviderConfig, prompt: &PromptBundle) -> Self {
        ChatRequest {
            model_id: config.model_id.clone(),
            messages: vec![
                ChatMessage {
                    role: Role::System,
                    content: prompt.system_text.clone(),
                },
                ChatMessage {
                    role: Role::User,
                    content: prompt.user_text.clone(),
                },
            ],
            temperature: config.temperature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    Ok,
    Refusal,
    TransportError,
    HttpError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    pub provider: String,
    #[serde(with = "millis")]
    pub latency: Duration,
    pub status: ResponseStatus,
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

/// Content address of a logical request: SHA-256 over the model id, every
/// message content, and the coefficient tag, each length-prefixed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReplayKey([u8; 32]);

impl ReplayKey {
    pub fn new(request: &ChatRequest, ewc: EmotionWeight) -> Self {
        let mut h = Sha256::new();
        let mut field = |bytes: &[u8]| {
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(bytes);
        };
        field(request.model_id.as_bytes());
        for m in &request.messages {
            field(m.content.as_bytes());
        }
        field(ewc.to_string().as_bytes());
        ReplayKey(h.finalize().into())
    }

    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s).ok()?;
        Some(ReplayKey(bytes.try_into().ok()?))
    }
}

impl std::fmt::Display for ReplayKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.hex())
    }
}

/// Content a backend returned, with an explicit refusal flag when the
/// provider reports one out of band.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendReply {
    pub content: String,
    pub refused: bool,
}

impl From<String> for BackendReply {
    fn from(content: String) -> Self {
        BackendReply { content, refused: false }
    }
}

pub trait Backend: Send + Sync {
    fn send(&self, request: &ChatRequest, key: &ReplayKey) -> Result<BackendReply, GatewayError>;
}

pub struct Gateway {
    config: ProviderConfig,
    backend: Box<dyn Backend>,
    limiter: InFlightLimiter,
    refusals: Arc<RefusalDetector>,
    recorder: Option<FixtureStore>,
}

impl Gateway {
    pub fn new(config: ProviderConfig, backend: Box<dyn Backend>) -> Result<Self, GatewayError> {
        config.validate()?;
        let limiter = InFlightLimiter::new(config.max_in_flight);
        Ok(Gateway {
            config,
            backend,
            limiter,
            refusals: Arc::new(RefusalDetector::default()),
            recorder: None,
        })
    }

    pub fn live(config: ProviderConfig) -> Result<Self, GatewayError> {
        let backend = HttpBackend::new(&config)?;
        Self::new(config, Box::new(backend))
    }

    pub fn replay(config: ProviderConfig, store: FixtureStore) -> Result<Self, GatewayError> {
        Self::new(config, Box::new(ReplayBackend::new(store)))
    }

    pub fn with_refusals(mut self, detector: Arc<RefusalDetector>) -> Self {
        self.refusals = detector;
        self
    }

    /// Every successful reply is also written to `store`.
    pub fn recording_to(mut self, store: FixtureStore) -> Self {
        self.recorder = Some(store);
        self
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn limiter(&self) -> &InFlightLimiter {
        &self.limiter
    }

    pub fn request_for(&self, prompt: &PromptBundle) -> ChatRequest {
        ChatRequest::from_prompt(&self.config, prompt)
    }

    /// Sends one request and returns the assistant text. Blocks while the
    /// provider already has `max_in_flight` requests outstanding.
    pub fn complete(&self, request: &ChatRequest, ewc: EmotionWeight) -> Result<ChatResponse, GatewayError> {
        let key = ReplayKey::new(request, ewc);
        let started = Instant::now();
        let reply = {
            let _slot = self.limiter.acquire();
            self.backend.send(request, &key)?
        };
        let latency = started.elapsed();
        if reply.content.trim().is_empty() && !reply.refused {
            return Err(GatewayError::InvalidResponse("empty assistant message".into()));
        }
        if let Some(store) = &self.recorder {
            store.record(&key, &reply.content)?;
        }
        let status = if reply.refused || self.refusals.is_refusal(&reply.content) {
            ResponseStatus::Refusal
        } else {
            ResponseStatus::Ok
        };
        Ok(ChatResponse {
            content: reply.content,
            provider: self.config.name.clone(),
            latency,
            status,
        })
    }
}
