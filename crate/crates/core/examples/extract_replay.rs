//! Runs findings and triplet extraction on the fixture papers from the
//! committed replay cache, then prints one paper's triplets.
//!
//!     cargo run --example extract_replay

use std::path::Path;
use std::sync::Arc;

use atlas::config::AtlasConfig;
use atlas::corpus::FixtureFetcher;
use atlas::extraction::run_extraction;
use atlas::pipeline;
use atlas::provider::{Provider, ReplayCache};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let config = AtlasConfig::load(&fixtures.join("atlas.toml"))?;
    let (records, _) = pipeline::ingest(&FixtureFetcher, &config.corpus.sources)?;
    let (papers, _) = pipeline::filter(&records, &config.corpus.filter, &config.corpus.priority);
    let provider = Provider::replay(Arc::new(ReplayCache::open(config.cache_dir())));
    let run = run_extraction(&papers, &provider, &config.extraction.to_config()?);
    println!(
        "{} findings, {} triplets, {} notes, {} quarantined",
        run.findings.len(),
        run.triplets.len(),
        run.notes.len(),
        run.quarantine.len()
    );
    for t in run.triplets.iter().filter(|t| t.paper_id.ends_with("008")) {
        println!("  {} -[{}]-> {} ({})", t.cause, t.relationship, t.effect, t.net_outcome);
    }
    for q in &run.quarantine {
        println!("  quarantined {}: {}", q.paper_id, q.reason);
    }
    Ok(())
}
