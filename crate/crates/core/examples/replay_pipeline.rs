//! Runs every stage on the fixture from the replay cache and prints the run
//! summary and export digests.
//!
//!     cargo run --example replay_pipeline -- [work_dir]

use std::path::{Path, PathBuf};

use atlas::canonical::sha256_hex;
use atlas::config::AtlasConfig;
use atlas::corpus::FixtureFetcher;
use atlas::pipeline::{Pipeline, ANALYSIS, GRAPH};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scratch = tempfile::tempdir()?;
    let work = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| scratch.path().to_path_buf());
    let mut config = AtlasConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/atlas.toml"))?;
    config.work_dir = work.clone();
    let summary = Pipeline::from_config(config)?.run_all(&FixtureFetcher)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    for artifact in [GRAPH, ANALYSIS] {
        println!("{artifact}: {}", sha256_hex(&std::fs::read(work.join(artifact))?));
    }
    Ok(())
}
