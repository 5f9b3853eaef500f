//! Chat-completion providers: the trait, and an HTTP client for
//! OpenAI-compatible endpoints.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::GatewayError;

/// Decoding parameters. Unset fields are left to the provider's defaults and
/// are not sent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Message {
        Message { role: "user".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub decoding: DecodingParams,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: Option<u64>,
    #[serde(default)]
    pub completion_tokens: Option<u64>,
    #[serde(default)]
    pub total_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub content: String,
    pub usage: Option<Usage>,
}

pub trait ChatProvider: Send + Sync {
    /// Identifies the backend; part of every request fingerprint.
    fn id(&self) -> String;

    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

pub struct HttpProvider {
    endpoint: String,
    api_key_env: Option<String>,
    agent: ureq::Agent,
}

impl HttpProvider {
    /// `api_key_env` names the environment variable holding the bearer token;
    /// it is read per request so cached runs need no credentials.
    pub fn new(endpoint: impl Into<String>, api_key_env: Option<String>, timeout: Duration) -> HttpProvider {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .new_agent();
        HttpProvider { endpoint: endpoint.into(), api_key_env, agent }
    }

    fn api_key(&self) -> Result<Option<String>, GatewayError> {
        match &self.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| GatewayError::Config(format!("environment variable {var} is not set"))),
        }
    }
}

pub(crate) fn request_body(request: &ChatRequest) -> Value {
    let mut body = json!({ "model": request.model, "messages": request.messages });
    if let Value::Object(params) = serde_json::to_value(&request.decoding).expect("params serialize") {
        body.as_object_mut().unwrap().extend(params);
    }
    body
}

/// Maps an HTTP status and body to the failure classes callers act on.
pub(crate) fn classify(status: u16, body: &str) -> GatewayError {
    let message: String = body.chars().take(500).collect();
    match status {
        401 | 403 => GatewayError::Auth { status, message },
        402 => GatewayError::Quota(message),
        429 if body.contains("insufficient_quota") || body.contains("quota") => GatewayError::Quota(message),
        408 | 409 | 425 | 429 | 500..=599 => GatewayError::Transient(format!("HTTP {status}: {message}")),
        _ => GatewayError::Rejected { status, message },
    }
}

pub(crate) fn parse_completion(body: &str) -> Result<ChatResponse, GatewayError> {
    let v: Value = serde_json::from_str(body).map_err(|e| GatewayError::Malformed(format!("not JSON: {e}")))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| GatewayError::Malformed("no choices[0].message.content".into()))?;
    if content.trim().is_empty() {
        return Err(GatewayError::Malformed("empty response".into()));
    }
    let usage = v.get("usage").and_then(|u| serde_json::from_value(u.clone()).ok());
    Ok(ChatResponse { content: content.to_string(), usage })
}

impl ChatProvider for HttpProvider {
    fn id(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = self.api_key()? {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send(request_body(request).to_string())
            .map_err(|e| GatewayError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| GatewayError::Transient(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(classify(status, &text));
        }
        parse_completion(&text)
    }
}
