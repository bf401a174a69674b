//! Re-records `tests/fixtures/cache` from `tests/fixtures/responses.json` and
//! the hashing embedder. Run after changing a prompt template or the corpus.
//!
//!     cargo run --example record_fixture

#[path = "../tests/support/mod.rs"]
mod support;

use std::sync::Arc;

use atlas::corpus::FixtureFetcher;
use atlas::pipeline::Pipeline;
use atlas::provider::ReplayCache;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cache_dir = support::fixture_dir().join("cache");
    if cache_dir.exists() {
        std::fs::remove_dir_all(&cache_dir)?;
    }
    let work = tempfile::tempdir()?;
    let config = support::fixture_config(work.path());
    let provider = support::recording_provider(Arc::new(ReplayCache::open(&cache_dir)));
    let summary = Pipeline::new(config, provider).run_all(&FixtureFetcher)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    println!("recorded {} responses into {}", ReplayCache::open(&cache_dir).len(), cache_dir.display());
    Ok(())
}
