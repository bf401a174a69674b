use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{normalize_doi, stable_id, PaperRecord, SourceDb};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub source: SourceDb,
    /// Local export file (JSON array or JSON lines) for the fixture fetcher.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub query_terms: Vec<String>,
}

/// A per-record schema violation. Collected, never fatal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{source_db} record #{index}: {message}")]
pub struct IngestError {
    pub source_db: SourceDb,
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub records: Vec<PaperRecord>,
    pub errors: Vec<IngestError>,
}

/// Where raw records come from. Only local exports are implemented; they are
/// what the pipeline and its tests consume.
pub trait SourceFetcher: Send + Sync {
    fn fetch(&self, config: &SourceConfig) -> std::io::Result<Vec<Value>>;
}

/// Reads a previously exported file: a JSON array, or one object per line.
#[derive(Debug, Default, Clone, Copy)]
pub struct FixtureFetcher;

impl SourceFetcher for FixtureFetcher {
    fn fetch(&self, config: &SourceConfig) -> std::io::Result<Vec<Value>> {
        let path = config.path.as_deref().ok_or_else(|| {
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "source has no input path")
        })?;
        read_raw(path)
    }
}

fn read_raw(path: &Path) -> std::io::Result<Vec<Value>> {
    let text = std::fs::read_to_string(path)?;
    let invalid = |e: serde_json::Error| std::io::Error::new(std::io::ErrorKind::InvalidData, e);
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(invalid);
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(invalid))
        .collect()
}

/// Maps source-specific raw records onto [`PaperRecord`], preserving order.
pub fn ingest_source(config: &SourceConfig, raw_records: &[Value]) -> IngestOutcome {
    let mut out = IngestOutcome::default();
    for (index, raw) in raw_records.iter().enumerate() {
        let mapped = match config.source {
            SourceDb::Fixture => map_fixture(raw),
            SourceDb::Acm => map_acm(raw),
            SourceDb::Ieee => map_ieee(raw),
            SourceDb::Springer => map_springer(raw),
            SourceDb::Arxiv => map_arxiv(raw),
        };
        match mapped {
            Ok(fields) => out.records.push(fields.into_record(config.source)),
            Err(message) => out.errors.push(IngestError {
                source_db: config.source,
                index,
                message,
            }),
        }
    }
    out
}

/// Fetches and ingests several sources concurrently; results keep the order
/// of `configs`.
pub fn ingest_all(
    fetcher: &dyn SourceFetcher,
    configs: &[SourceConfig],
) -> std::io::Result<Vec<IngestOutcome>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| scope.spawn(move || fetcher.fetch(cfg).map(|raw| ingest_source(cfg, &raw))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ingest worker panicked"))
            .collect()
    })
}

struct Fields {
    native_id: String,
    title: String,
    abstract_text: Option<String>,
    venue: String,
    pub_type: String,
    year: Option<i32>,
    authors: Vec<String>,
    doi: Option<String>,
    url: Option<String>,
}

impl Fields {
    fn into_record(self, source: SourceDb) -> PaperRecord {
        let doi = self.doi.as_deref().and_then(normalize_doi);
        PaperRecord {
            id: stable_id(source, &self.native_id, doi.as_deref()),
            title: collapse_ws(&self.title),
            abstract_text: self
                .abstract_text
                .map(|a| collapse_ws(&a))
                .filter(|a| !a.is_empty()),
            venue: self.venue,
            source_db: source,
            pub_type: self.pub_type,
            year: self.year,
            authors: self.authors,
            doi,
            url: self.url,
        }
    }
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn obj(raw: &Value) -> Result<&serde_json::Map<String, Value>, String> {
    raw.as_object().ok_or_else(|| "record is not an object".to_string())
}

fn opt_str(o: &serde_json::Map<String, Value>, field: &str) -> Result<Option<String>, String> {
    match o.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(Value::Number(n)) => Ok(Some(n.to_string())),
        Some(_) => Err(format!("field `{field}` must be a string")),
    }
}

fn req_str(o: &serde_json::Map<String, Value>, field: &str) -> Result<String, String> {
    opt_str(o, field)?
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| format!("missing required field `{field}`"))
}

fn opt_year(o: &serde_json::Map<String, Value>, field: &str) -> Result<Option<i32>, String> {
    match o.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => n
            .as_i64()
            .and_then(|y| i32::try_from(y).ok())
            .map(Some)
            .ok_or_else(|| format!("field `{field}` is not a year")),
        Some(Value::String(s)) => year_prefix(s)
            .map(Some)
            .ok_or_else(|| format!("field `{field}` is not a year")),
        Some(_) => Err(format!("field `{field}` is not a year")),
    }
}

fn year_prefix(s: &str) -> Option<i32> {
    let digits: String = s.trim().chars().take(4).collect();
    (digits.len() == 4).then(|| digits.parse().ok()).flatten()
}

fn string_list(v: Option<&Value>, field: &str) -> Result<Vec<String>, String> {
    match v {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|i| {
                i.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| format!("`{field}` entries must be strings"))
            })
            .collect(),
        Some(_) => Err(format!("field `{field}` must be a list")),
    }
}

/// `{native_id, title, abstract, type, venue, year, authors, doi, url}`
fn map_fixture(raw: &Value) -> Result<Fields, String> {
    let o = obj(raw)?;
    Ok(Fields {
        native_id: req_str(o, "native_id")?,
        title: req_str(o, "title")?,
        abstract_text: opt_str(o, "abstract")?,
        venue: opt_str(o, "venue")?.unwrap_or_default(),
        pub_type: req_str(o, "type")?,
        year: opt_year(o, "year")?,
        authors: string_list(o.get("authors"), "authors")?,
        doi: opt_str(o, "doi")?,
        url: opt_str(o, "url")?,
    })
}

/// ACM Digital Library CSL-JSON export.
fn map_acm(raw: &Value) -> Result<Fields, String> {
    let o = obj(raw)?;
    let year = o
        .get("issued")
        .and_then(|i| i.get("date-parts"))
        .and_then(|p| p.get(0))
        .and_then(|p| p.get(0))
        .and_then(Value::as_i64)
        .and_then(|y| i32::try_from(y).ok());
    let authors = match o.get("author") {
        Some(Value::Array(list)) => list
            .iter()
            .map(|a| {
                let given = a.get("given").and_then(Value::as_str).unwrap_or("");
                let family = a.get("family").and_then(Value::as_str).unwrap_or("");
                collapse_ws(&format!("{given} {family}"))
            })
            .collect(),
        Some(_) => return Err("field `author` must be a list".into()),
        None => Vec::new(),
    };
    Ok(Fields {
        native_id: req_str(o, "id")?,
        title: req_str(o, "title")?,
        abstract_text: opt_str(o, "abstract")?,
        venue: opt_str(o, "container-title")?.unwrap_or_default(),
        pub_type: req_str(o, "type")?,
        year,
        authors,
        doi: opt_str(o, "DOI")?,
        url: opt_str(o, "URL")?,
    })
}

/// IEEE Xplore metadata API article.
fn map_ieee(raw: &Value) -> Result<Fields, String> {
    let o = obj(raw)?;
    let authors = o
        .get("authors")
        .and_then(|a| a.get("authors"))
        .and_then(Value::as_array)
        .map(|list| {
            list.iter()
                .filter_map(|a| a.get("full_name").and_then(Value::as_str).map(str::to_string))
                .collect()
        })
        .unwrap_or_default();
    Ok(Fields {
        native_id: req_str(o, "article_number")?,
        title: req_str(o, "title")?,
        abstract_text: opt_str(o, "abstract")?,
        venue: opt_str(o, "publication_title")?.unwrap_or_default(),
        pub_type: req_str(o, "content_type")?,
        year: opt_year(o, "publication_year")?,
        authors,
        doi: opt_str(o, "doi")?,
        url: opt_str(o, "html_url")?,
    })
}

/// Springer Nature metadata API record.
fn map_springer(raw: &Value) -> Result<Fields, String> {
    let o = obj(raw)?;
    let authors = o
        .get("creators")
        .and_then(Value::as_array)
        .map(|list| {
            list.iter()
                .filter_map(|c| c.get("creator").and_then(Value::as_str).map(str::to_string))
                .collect()
        })
        .unwrap_or_default();
    let url = o
        .get("url")
        .and_then(Value::as_array)
        .and_then(|u| u.first())
        .and_then(|u| u.get("value"))
        .and_then(Value::as_str)
        .map(str::to_string);
    Ok(Fields {
        native_id: req_str(o, "identifier")?,
        title: req_str(o, "title")?,
        abstract_text: opt_str(o, "abstract")?,
        venue: opt_str(o, "publicationName")?.unwrap_or_default(),
        pub_type: req_str(o, "contentType")?,
        year: opt_year(o, "publicationDate")?,
        authors,
        doi: opt_str(o, "doi")?,
        url,
    })
}

/// arXiv Atom entry converted to JSON.
fn map_arxiv(raw: &Value) -> Result<Fields, String> {
    let o = obj(raw)?;
    let id = req_str(o, "id")?;
    Ok(Fields {
        url: Some(id.clone()),
        native_id: id,
        title: req_str(o, "title")?,
        abstract_text: opt_str(o, "summary")?,
        venue: opt_str(o, "journal_ref")?.unwrap_or_else(|| "arXiv".into()),
        pub_type: opt_str(o, "type")?.unwrap_or_else(|| "preprint".into()),
        year: opt_year(o, "published")?,
        authors: string_list(o.get("authors"), "authors")?,
        doi: opt_str(o, "doi")?,
    })
}
