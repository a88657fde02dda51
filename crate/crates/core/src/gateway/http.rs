use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendReply, ChatRequest, GatewayError, ProviderConfig, ReplayKey, Role};

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireAssistant,
}

#[derive(Deserialize)]
struct WireAssistant {
    #[serde(default)]
    content: Option<String>,
    #[serde(default)]
    refusal: Option<String>,
}

/// OpenAI-compatible `POST {base_url}/chat/completions` client.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    url: String,
    api_key_env: Option<String>,
    max_retries: u32,
    backoff: Duration,
}

impl HttpBackend {
    pub fn new(config: &ProviderConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(HttpBackend {
            client,
            url: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            api_key_env: config.api_key_env.clone(),
            max_retries: config.max_retries,
            backoff: Duration::from_millis(config.retry_backoff_ms),
        })
    }

    fn api_key(&self) -> Result<Option<String>, GatewayError> {
        let Some(var) = &self.api_key_env else {
            return Ok(None);
        };
        match std::env::var(var) {
            Ok(v) if !v.trim().is_empty() => Ok(Some(v)),
            _ => Err(GatewayError::AuthError(format!("environment variable {var} is not set"))),
        }
    }

    fn attempt(&self, body: &WireRequest<'_>, key: Option<&str>) -> Result<BackendReply, GatewayError> {
        let mut req = self.client.post(&self.url).json(body);
        if let Some(k) = key {
            req = req.bearer_auth(k);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                GatewayError::Timeout
            } else {
                GatewayError::TransportError(e.without_url().to_string())
            }
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                GatewayError::Timeout
            } else {
                GatewayError::TransportError(e.without_url().to_string())
            }
        })?;
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(GatewayError::AuthError(format!("provider answered HTTP {}", status.as_u16())));
        }
        if !status.is_success() {
            let body: String = text.chars().take(300).collect();
            return Err(GatewayError::HttpError {
                status: status.as_u16(),
                body,
            });
        }
        let parsed: WireResponse =
            serde_json::from_str(&text).map_err(|e| GatewayError::InvalidResponse(e.to_string()))?;
        let Some(choice) = parsed.choices.into_iter().next() else {
            return Err(GatewayError::InvalidResponse("no choices in response".into()));
        };
        match (choice.message.content, choice.message.refusal) {
            (_, Some(refusal)) if !refusal.trim().is_empty() => Ok(BackendReply {
                content: refusal,
                refused: true,
            }),
            (Some(content), _) => Ok(content.into()),
            (None, _) => Err(GatewayError::InvalidResponse("assistant message has no content".into())),
        }
    }
}

impl Backend for HttpBackend {
    fn send(&self, request: &ChatRequest, _key: &ReplayKey) -> Result<BackendReply, GatewayError> {
        let api_key = self.api_key()?;
        let body = WireRequest {
            model: &request.model_id,
            messages: request
                .messages
                .iter()
                .map(|m| WireMessage {
                    role: match m.role {
                        Role::System => "system",
                        Role::User => "user",
                    },
                    content: &m.content,
                })
                .collect(),
            temperature: request.temperature,
        };

        let mut attempt = 0;
        loop {
            match self.attempt(&body, api_key.as_deref()) {
                Err(e) if e.is_retryable() && attempt < self.max_retries => {
                    let wait = self.backoff * 2u32.saturating_pow(attempt);
                    log::warn!("request to {} failed ({e}); retry {} in {:?}", self.url, attempt + 1, wait);
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}
