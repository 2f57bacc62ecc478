use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::provider::{values_hash, ChatProvider, CompletionRequest, PromptKey, ProviderError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MockFailure {
    Transient,
    Permanent,
}

/// One row of a mock table. Either `values` (hashed on load) or
/// `values_hash` identifies the prompt. `responses[k]` answers attempt `k`;
/// later attempts reuse the last response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockEntry {
    pub template: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values_hash: Option<String>,
    #[serde(default)]
    pub responses: Vec<String>,
    /// Each attempt fails transiently on its first `transient_failures` tries.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub transient_failures: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<MockFailure>,
}

fn is_zero(n: &u32) -> bool {
    *n == 0
}

impl MockEntry {
    pub fn new(template: &str, values: BTreeMap<String, String>, responses: Vec<String>) -> Self {
        MockEntry { template: template.into(), values: Some(values), values_hash: None, responses, transient_failures: 0, error: None }
    }

    fn key(&self) -> Result<PromptKey, String> {
        let hash = match (&self.values, &self.values_hash) {
            (Some(v), _) => values_hash(v),
            (None, Some(h)) => h.clone(),
            (None, None) => return Err(format!("mock entry for {} has neither values nor values_hash", self.template)),
        };
        Ok(PromptKey { template: self.template.clone(), values_hash: hash })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockTable {
    pub entries: Vec<MockEntry>,
}

impl MockTable {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// Table-driven provider: the reply is a pure function of the prompt key,
/// attempt and retry number. Unknown keys are errors, never guesses.
#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    entries: HashMap<PromptKey, MockEntry>,
}

impl MockProvider {
    pub fn new(table: MockTable) -> Result<Self, String> {
        let mut p = MockProvider::default();
        p.extend(table)?;
        Ok(p)
    }

    pub fn from_path(path: &Path) -> Result<Self, String> {
        let table = MockTable::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::new(table)
    }

    /// Adds entries; a later entry replaces an earlier one with the same key.
    pub fn extend(&mut self, table: MockTable) -> Result<(), String> {
        for entry in table.entries {
            if entry.responses.is_empty() && entry.error.is_none() {
                return Err(format!("mock entry for {} has no responses", entry.template));
            }
            self.entries.insert(entry.key()?, entry);
        }
        Ok(())
    }

    pub fn insert(&mut self, entry: MockEntry) {
        let key = entry.key().expect("entry carries values");
        self.entries.insert(key, entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ChatProvider for MockProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let miss = |key: String| ProviderError::MockMiss { key, attempt: request.attempt };
        let key = request.key.as_ref().ok_or_else(|| miss("<unkeyed request>".into()))?;
        let entry = self.entries.get(key).ok_or_else(|| miss(key.to_string()))?;
        if request.retry < entry.transient_failures {
            return Err(ProviderError::Transient(format!("scripted failure for {key}")));
        }
        match entry.error {
            Some(MockFailure::Transient) => return Err(ProviderError::Transient(format!("scripted failure for {key}"))),
            Some(MockFailure::Permanent) => return Err(ProviderError::Permanent(format!("scripted failure for {key}"))),
            None => {}
        }
        let idx = (request.attempt as usize).min(entry.responses.len() - 1);
        Ok(entry.responses[idx].clone())
    }

    fn name(&self) -> &str {
        "mock"
    }
}
