//! Paper metadata: ingestion from scholarly sources, filtering, and
//! cross-source deduplication.

mod filter;
mod sources;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use filter::{dedupe, dedupe_with_report, filter_corpus, normalize_title, CorpusFilter};
pub use sources::{
    ingest_all, ingest_source, FixtureFetcher, IngestError, IngestOutcome, SourceConfig,
    SourceFetcher,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceDb {
    Acm,
    Ieee,
    Springer,
    Arxiv,
    Fixture,
}

impl SourceDb {
    pub const ALL: [SourceDb; 5] = [
        SourceDb::Acm,
        SourceDb::Ieee,
        SourceDb::Springer,
        SourceDb::Arxiv,
        SourceDb::Fixture,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceDb::Acm => "acm",
            SourceDb::Ieee => "ieee",
            SourceDb::Springer => "springer",
            SourceDb::Arxiv => "arxiv",
            SourceDb::Fixture => "fixture",
        }
    }
}

impl fmt::Display for SourceDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceDb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SourceDb::ALL
            .into_iter()
            .find(|db| db.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown source `{s}`"))
    }
}

/// One paper. Field order is the on-disk JSON-lines order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: Option<String>,
    pub venue: String,
    pub source_db: SourceDb,
    pub pub_type: String,
    pub year: Option<i32>,
    pub authors: Vec<String>,
    pub doi: Option<String>,
    pub url: Option<String>,
}

impl PaperRecord {
    pub fn has_abstract(&self) -> bool {
        self.abstract_text
            .as_deref()
            .is_some_and(|a| !a.trim().is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    MissingAbstract,
    PubTypeExcluded,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dropped {
    pub id: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub kept: usize,
    pub dropped: Vec<Dropped>,
}

impl IngestReport {
    pub fn total(&self) -> usize {
        self.kept + self.dropped.len()
    }

    pub fn count(&self, reason: DropReason) -> usize {
        self.dropped.iter().filter(|d| d.reason == reason).count()
    }
}

/// Lowercased DOI without resolver prefix, or `None` when blank.
pub fn normalize_doi(doi: &str) -> Option<String> {
    let t = doi.trim().to_lowercase();
    let t = ["https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "doi:"]
        .iter()
        .fold(t, |acc, prefix| acc.strip_prefix(prefix).map(str::to_string).unwrap_or(acc));
    let t = t.trim().to_string();
    (!t.is_empty()).then_some(t)
}

/// DOI when present, else the first 16 hex digits of SHA-256 over
/// `source \0 native_id`.
pub fn stable_id(source: SourceDb, native_id: &str, doi: Option<&str>) -> String {
    if let Some(doi) = doi.and_then(normalize_doi) {
        return doi;
    }
    let mut h = Sha256::new();
    h.update(source.as_str().as_bytes());
    h.update([0u8]);
    h.update(native_id.as_bytes());
    hex::encode(h.finalize())[..16].to_string()
}
