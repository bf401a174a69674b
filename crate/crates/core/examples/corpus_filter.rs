//! Ingests the fixture exports, applies the filters and prints what was dropped.
//!
//!     cargo run --example corpus_filter

use std::path::Path;

use atlas::config::AtlasConfig;
use atlas::corpus::FixtureFetcher;
use atlas::pipeline;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = AtlasConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/atlas.toml"))?;
    let (records, errors) = pipeline::ingest(&FixtureFetcher, &config.corpus.sources)?;
    println!("{} records, {} ingest errors", records.len(), errors.len());
    let (papers, report) = pipeline::filter(&records, &config.corpus.filter, &config.corpus.priority);
    println!("kept {} of {}", papers.len(), report.total());
    for d in &report.dropped {
        println!("  dropped {:<28} {:?}", d.id, d.reason);
    }
    Ok(())
}
