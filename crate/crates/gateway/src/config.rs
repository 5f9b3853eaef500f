//! Per-model configuration as read from the run config file.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::gateway::RetryPolicy;
use crate::mock::{MockBehavior, MockProvider};
use crate::provider::{ChatProvider, DecodingParams, HttpProvider};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderConfig {
    /// OpenAI-compatible chat-completions endpoint.
    Http {
        endpoint: String,
        /// Environment variable holding the API key.
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
    Mock { behavior: MockBehavior },
}

fn default_timeout() -> u64 {
    300
}

fn default_in_flight() -> usize {
    4
}

fn default_retries() -> u32 {
    3
}

fn default_retry_ms() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Name used in records and reports.
    pub id: String,
    /// Name sent to the endpoint; defaults to `id`.
    #[serde(default)]
    pub model: Option<String>,
    pub provider: ProviderConfig,
    #[serde(default)]
    pub decoding: DecodingParams,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_retry_ms")]
    pub retry_base_ms: u64,
}

impl ModelConfig {
    pub fn mock(id: impl Into<String>, behavior: MockBehavior) -> ModelConfig {
        ModelConfig {
            id: id.into(),
            model: None,
            provider: ProviderConfig::Mock { behavior },
            decoding: DecodingParams::default(),
            max_in_flight: default_in_flight(),
            max_retries: default_retries(),
            retry_base_ms: 0,
        }
    }

    pub fn api_model(&self) -> &str {
        self.model.as_deref().unwrap_or(&self.id)
    }

    pub fn build_provider(&self) -> Arc<dyn ChatProvider> {
        match &self.provider {
            ProviderConfig::Http { endpoint, api_key_env, timeout_secs } => {
                Arc::new(HttpProvider::new(endpoint.clone(), api_key_env.clone(), Duration::from_secs(*timeout_secs)))
            }
            ProviderConfig::Mock { behavior } => Arc::new(MockProvider::new(behavior.clone())),
        }
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            base_delay: Duration::from_millis(self.retry_base_ms),
            ..RetryPolicy::default()
        }
    }
}
