//! Provider-agnostic chat completion: prompt templates, dialogue history,
//! structured replies with corrective re-prompts, and mock/HTTP providers.

pub mod client;
pub mod exchange;
pub mod http;
pub mod mock;
pub mod provider;
pub mod structured;
pub mod template;

use std::path::Path;
use std::sync::Arc;

pub use client::{CallRecord, LlmClient, LlmError, RateLimiter, StructuredReply};
pub use exchange::{ChatExchange, Role, TemperatureClass, Turn, WireMessage};
pub use http::{HttpConfig, HttpProvider};
pub use mock::{MockEntry, MockFailure, MockProvider, MockTable};
pub use provider::{values_hash, ChatProvider, CompletionRequest, PromptKey, ProviderError};
pub use structured::{parse_json_object, FieldSpec, FieldType, StructuredSpec};
pub use template::{PromptTemplate, Rendered, TemplateError};

/// Builds the provider named by `ELMI_PROVIDER` (`mock` by default, or
/// `http`). The mock reads `ELMI_MOCK_TABLE`, falling back to `default_table`.
pub fn provider_from_env(default_table: Option<&Path>) -> Result<Arc<dyn ChatProvider>, String> {
    match std::env::var("ELMI_PROVIDER").as_deref() {
        Ok("http") => Ok(Arc::new(HttpProvider::new(HttpConfig::from_env()?))),
        Ok("mock") | Err(_) => {
            let path = std::env::var("ELMI_MOCK_TABLE").ok();
            match path.as_deref().map(Path::new).or(default_table) {
                Some(p) => Ok(Arc::new(MockProvider::from_path(p)?)),
                None => Err("mock provider selected but no mock table configured (ELMI_MOCK_TABLE)".into()),
            }
        }
        Ok(other) => Err(format!("unknown ELMI_PROVIDER {other:?}; expected mock or http")),
    }
}

/// Rate limiter configured by `ELMI_RATE_LIMIT_RPM`, if set.
pub fn rate_limiter_from_env() -> Option<RateLimiter> {
    let rpm: u32 = std::env::var("ELMI_RATE_LIMIT_RPM").ok()?.parse().ok()?;
    Some(RateLimiter::new(rpm, (rpm / 60).max(1)))
}
