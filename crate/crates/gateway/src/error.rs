use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("authentication failed (HTTP {status}): {message}")]
    Auth { status: u16, message: String },
    #[error("quota exhausted: {0}")]
    Quota(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    /// Worth retrying: 5xx, rate limiting, timeouts, dropped connections.
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("request rejected (HTTP {status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("no cached transcript for {0} and the run is offline")]
    OfflineMiss(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("cache: {0}")]
    Cache(String),
}

impl GatewayError {
    pub fn is_transient(&self) -> bool {
        matches!(self, GatewayError::Transient(_))
    }

    /// Stable short name for manifests and failure summaries.
    pub fn kind(&self) -> &'static str {
        match self {
            GatewayError::Auth { .. } => "auth",
            GatewayError::Quota(_) => "quota",
            GatewayError::Malformed(_) => "malformed_response",
            GatewayError::Transient(_) => "transient",
            GatewayError::Rejected { .. } => "rejected",
            GatewayError::RetriesExhausted { .. } => "retries_exhausted",
            GatewayError::OfflineMiss(_) => "offline_cache_miss",
            GatewayError::Config(_) => "config",
            GatewayError::Cache(_) => "cache",
        }
    }
}
