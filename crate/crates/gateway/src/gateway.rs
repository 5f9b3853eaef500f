//! Cached, retried, rate-limited completions.

use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use crate::cache::{fingerprint, Transcript, TranscriptCache};
use crate::limiter::RateLimiter;
use crate::provider::{ChatProvider, ChatRequest, DecodingParams, Message};
use crate::template::PromptTemplate;
use crate::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt; only transient failures are retried.
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_retries: 3, base_delay: Duration::from_millis(500), max_delay: Duration::from_secs(20) }
    }
}

impl RetryPolicy {
    /// Exponential backoff before retry number `n` (1-based).
    pub fn delay(&self, n: u32) -> Duration {
        self.base_delay.saturating_mul(1 << (n - 1).min(16)).min(self.max_delay)
    }
}

pub struct CompletionRequest<'a> {
    pub model_id: &'a str,
    /// Model name sent to the endpoint.
    pub model: &'a str,
    pub template: &'a PromptTemplate,
    pub prompt: &'a str,
    pub decoding: &'a DecodingParams,
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub transcript: Transcript,
    pub cached: bool,
}

pub struct Gateway {
    provider: Arc<dyn ChatProvider>,
    cache: Arc<TranscriptCache>,
    limiter: Arc<RateLimiter>,
    retry: RetryPolicy,
    offline: bool,
}

impl Gateway {
    pub fn new(
        provider: Arc<dyn ChatProvider>,
        cache: Arc<TranscriptCache>,
        limiter: Arc<RateLimiter>,
        retry: RetryPolicy,
    ) -> Gateway {
        Gateway { provider, cache, limiter, retry, offline: false }
    }

    /// Serve from the cache only; misses become [`GatewayError::OfflineMiss`].
    pub fn offline(mut self, offline: bool) -> Gateway {
        self.offline = offline;
        self
    }

    pub fn cache(&self) -> &TranscriptCache {
        &self.cache
    }

    pub fn limiter(&self) -> &RateLimiter {
        &self.limiter
    }

    pub fn fingerprint(&self, req: &CompletionRequest<'_>) -> String {
        fingerprint(&self.provider.id(), req.model, &req.template.template_id, &req.template.body, req.prompt, req.decoding)
    }

    pub fn complete(&self, req: &CompletionRequest<'_>) -> Result<Completion, GatewayError> {
        let fp = self.fingerprint(req);
        if let Some(t) = self.cache.get(&fp)? {
            return Ok(Completion { transcript: t, cached: true });
        }
        if self.offline {
            return Err(GatewayError::OfflineMiss(fp));
        }
        let chat = ChatRequest {
            model: req.model.to_string(),
            messages: vec![Message::user(req.prompt)],
            decoding: req.decoding.clone(),
        };
        let mut retries = 0;
        let response = loop {
            let result = {
                let _permit = self.limiter.acquire();
                self.provider.chat(&chat)
            };
            match result {
                Ok(r) => break r,
                Err(e) if e.is_transient() && retries < self.retry.max_retries => {
                    retries += 1;
                    log::warn!("{}: {e}; retry {retries}/{}", req.model_id, self.retry.max_retries);
                    std::thread::sleep(self.retry.delay(retries));
                }
                Err(e) if e.is_transient() => {
                    return Err(GatewayError::RetriesExhausted { attempts: retries + 1, last: e.to_string() })
                }
                Err(e) => return Err(e),
            }
        };
        if response.content.trim().is_empty() {
            return Err(GatewayError::Malformed("empty response".into()));
        }
        if retries > 0 {
            log::info!("{}: succeeded after {retries} retries", req.model_id);
        }
        let transcript = Transcript {
            request_fingerprint: fp,
            model_id: req.model_id.to_string(),
            model: req.model.to_string(),
            provider: self.provider.id(),
            template_id: req.template.template_id.clone(),
            task_kind: req.template.task_kind,
            prompt: req.prompt.to_string(),
            raw_response: response.content,
            decoding: req.decoding.clone(),
            usage: response.usage,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            retries,
        };
        self.cache.put(&transcript)?;
        Ok(Completion { transcript, cached: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_grows_and_caps() {
        let p = RetryPolicy { max_retries: 9, base_delay: Duration::from_millis(100), max_delay: Duration::from_secs(1) };
        assert_eq!(p.delay(1), Duration::from_millis(100));
        assert_eq!(p.delay(3), Duration::from_millis(400));
        assert_eq!(p.delay(9), Duration::from_secs(1));
    }
}
