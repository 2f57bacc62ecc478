//! HTTP surface over [`elmi_studio::app::Studio`] and the shared setup used
//! by the `elmi` binary.

pub mod api;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use elmi_llm::LlmClient;
use elmi_studio::app::{fixtures_root, provider_from_env, Sources, Studio};
use elmi_studio::store::Store;

/// Fixture library shipped with the workspace.
pub fn default_fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// A studio over the store at `db`, with sources and provider chosen by the
/// environment (fixtures and the mock provider unless configured otherwise).
pub fn open_studio(db: &Path, fixtures: &Path) -> Result<Studio, String> {
    let store = Store::open(db).map_err(|e| format!("{}: {e}", db.display()))?;
    let provider = provider_from_env(&fixtures_root(fixtures))?;
    let mut client = LlmClient::new(provider);
    if let Some(limiter) = elmi_llm::rate_limiter_from_env() {
        client = client.with_rate_limit(limiter);
    }
    Ok(Studio::new(Arc::new(store), Arc::new(client), Sources::from_env(fixtures)))
}
