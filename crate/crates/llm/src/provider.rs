use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exchange::{TemperatureClass, WireMessage};

/// Identifies a rendered prompt independent of wording: the template id and a
/// hash of the values it was rendered with.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PromptKey {
    pub template: String,
    pub values_hash: String,
}

impl PromptKey {
    pub fn new(template: &str, values: &BTreeMap<String, String>) -> Self {
        PromptKey { template: template.to_string(), values_hash: values_hash(values) }
    }
}

impl std::fmt::Display for PromptKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}#{}", self.template, self.values_hash)
    }
}

/// SHA-256 over the canonical JSON of the (sorted) value map, hex encoded.
pub fn values_hash(values: &BTreeMap<String, String>) -> String {
    let canonical = serde_json::to_vec(values).expect("string map serializes");
    hex::encode(Sha256::digest(canonical))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompletionRequest {
    pub messages: Vec<WireMessage>,
    pub temperature: TemperatureClass,
    pub key: Option<PromptKey>,
    /// Re-prompt number within a structured completion (0 = first prompt).
    pub attempt: u32,
    /// Transport retry number for this attempt.
    pub retry: u32,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProviderError {
    #[error("transient provider failure: {0}")]
    Transient(String),
    #[error("provider failure: {0}")]
    Permanent(String),
    #[error("no mock entry for {key} (attempt {attempt})")]
    MockMiss { key: String, attempt: u32 },
}

impl ProviderError {
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderError::Transient(_))
    }
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError>;

    fn name(&self) -> &str;
}
