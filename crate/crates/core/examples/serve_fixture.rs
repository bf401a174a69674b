//! Builds the fixture atlas in a scratch directory and serves it.
//!
//!     cargo run --example serve_fixture -- [addr]
//!     curl 'http://127.0.0.1:8080/api/search?q=music'

use std::path::Path;
use std::sync::Arc;

use atlas::config::AtlasConfig;
use atlas::corpus::FixtureFetcher;
use atlas::pipeline::{Pipeline, ANALYSIS, GRAPH};
use atlas::service::api::{serve, AppState};
use atlas::service::SnapshotSource;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let addr = std::env::args().nth(1).unwrap_or_else(|| "127.0.0.1:8080".into());
    let work = tempfile::tempdir()?;
    let mut config = AtlasConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/atlas.toml"))?;
    config.work_dir = work.path().to_path_buf();
    Pipeline::from_config(config)?.run_all(&FixtureFetcher)?;
    let source = SnapshotSource {
        graph: work.path().join(GRAPH),
        analysis: Some(work.path().join(ANALYSIS)),
    };
    let state = Arc::new(AppState::new(source.load()?, Some(source), None));
    serve(addr.parse()?, state)?;
    Ok(())
}
