//! Everything between a dataset and a raw model response: prompt templates,
//! the chat-completion client, a content-addressed transcript cache and the
//! concurrency ceiling. A mock provider answers prompts offline.

pub mod cache;
pub mod config;
pub mod describe;
mod error;
pub mod gateway;
pub mod limiter;
pub mod mock;
pub mod provider;
pub mod template;

pub use cache::{fingerprint, CacheStats, Transcript, TranscriptCache};
pub use config::{ModelConfig, ProviderConfig};
pub use error::GatewayError;
pub use gateway::{Completion, CompletionRequest, Gateway, RetryPolicy};
pub use limiter::RateLimiter;
pub use mock::{MockBehavior, MockProvider};
pub use provider::{ChatProvider, ChatRequest, ChatResponse, DecodingParams, HttpProvider, Message, Usage};
pub use template::{PromptError, PromptTemplate};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
