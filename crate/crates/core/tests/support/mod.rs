//! Fixture corpus helpers shared by integration tests and the recorder example.
#![allow(dead_code)]

pub mod oracles;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use atlas::config::AtlasConfig;
use atlas::extraction::prompts::{FINDINGS_TEMPLATE_ID, NAMING_TEMPLATE_ID, TRIPLET_TEMPLATE_ID};
use atlas::provider::{HashingEmbedder, Provider, ReplayCache, Request, RetryPolicy, ScriptedBackend, SplitBackend};
use serde::Deserialize;
use serde_json::{json, Value};

pub const EMBEDDING_DIM: usize = 128;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// The fixture configuration, writing into `work_dir`.
pub fn fixture_config(work_dir: &Path) -> AtlasConfig {
    let mut c = AtlasConfig::load(&fixture_dir().join("atlas.toml")).expect("fixture config");
    c.work_dir = work_dir.to_path_buf();
    c
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScriptedFinding {
    pub text: String,
    pub cause: String,
    pub relationship: String,
    pub effect: String,
    pub net_outcome: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScriptedNote {
    #[serde(rename = "type")]
    pub note_type: String,
    pub description: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScriptedPaper {
    #[serde(default)]
    pub findings: Vec<ScriptedFinding>,
    #[serde(default)]
    pub keywords: Vec<String>,
    pub note: Option<ScriptedNote>,
    pub raw: Option<String>,
}

pub fn scripted_papers() -> HashMap<String, ScriptedPaper> {
    let text = std::fs::read_to_string(fixture_dir().join("responses.json")).expect("responses.json");
    serde_json::from_str(&text).expect("responses.json parses")
}

/// `(title, abstract)` for every raw record that has an abstract.
pub fn raw_abstracts() -> Vec<(String, String)> {
    let mut out = Vec::new();
    for file in ["corpus/fixture.json", "corpus/acm.json"] {
        let text = std::fs::read_to_string(fixture_dir().join(file)).expect("corpus file");
        let records: Vec<Value> = serde_json::from_str(&text).expect("corpus parses");
        for r in records {
            if let (Some(t), Some(a)) = (r["title"].as_str(), r["abstract"].as_str()) {
                out.push((t.to_string(), a.to_string()));
            }
        }
    }
    out
}

fn findings_response(p: &ScriptedPaper) -> String {
    if let Some(raw) = &p.raw {
        return raw.clone();
    }
    if let Some(n) = &p.note {
        return format!(
            "Note:\n  1. type: {}\n  2. description: {}\nKeywords: {}\n",
            n.note_type,
            n.description,
            p.keywords.join(", ")
        );
    }
    let mut s = String::from("Summaries:\n");
    for f in &p.findings {
        s.push_str(&format!("- {}\n", f.text));
    }
    s.push_str(&format!("Keywords: {}\n", p.keywords.join(", ")));
    s
}

fn subject(key: &str) -> Value {
    let (head, feature) = key.split_once('>').unwrap_or((key, ""));
    let (ty, subtype) = head.split_once(':').unwrap_or((head, ""));
    json!({"type": ty, "subtype": subtype, "feature": feature})
}

fn triplet_response(f: &ScriptedFinding) -> String {
    let v = json!({
        "cause": subject(&f.cause),
        "relationship": f.relationship,
        "effect": subject(&f.effect),
        "net_outcome": f.net_outcome,
    });
    serde_json::to_string_pretty(&v).expect("triplet serializes")
}

fn naming_response(prompt: &str) -> String {
    let terms: Vec<&str> = prompt
        .lines()
        .filter_map(|l| l.strip_prefix("- "))
        .collect();
    let first = terms.first().copied().unwrap_or("terms");
    let second = terms.get(1).copied().unwrap_or(first);
    json!({
        "name": format!("Around {first}"),
        "description": format!("Keys closest to {first}. Members share vocabulary with {second}."),
    })
    .to_string()
}

/// Answers findings, triplet and naming requests from `responses.json`.
pub fn scripted_responder() -> impl Fn(&Request) -> Option<String> + Send + Sync {
    let papers = scripted_papers();
    let abstracts = raw_abstracts();
    let findings: HashMap<String, ScriptedFinding> = papers
        .values()
        .flat_map(|p| p.findings.iter().map(|f| (f.text.clone(), f.clone())))
        .collect();
    move |req: &Request| match req.template_id.as_str() {
        FINDINGS_TEMPLATE_ID => {
            let (title, _) = abstracts.iter().find(|(_, a)| req.prompt.contains(a.as_str()))?;
            papers.get(title).map(findings_response)
        }
        TRIPLET_TEMPLATE_ID => findings
            .iter()
            .find(|(text, _)| req.prompt.contains(&format!("\"{text}\"")))
            .map(|(_, f)| triplet_response(f)),
        NAMING_TEMPLATE_ID => Some(naming_response(&req.prompt)),
        _ => None,
    }
}

/// A live provider backed by the scripted responder and the hashing
/// embedder, writing through to `cache`.
pub fn recording_provider(cache: Arc<ReplayCache>) -> Provider {
    let backend = SplitBackend {
        completions: Arc::new(ScriptedBackend(scripted_responder())),
        embeddings: Arc::new(HashingEmbedder { dim: EMBEDDING_DIM }),
    };
    Provider::live(cache, Arc::new(backend)).with_retry(RetryPolicy::no_delay())
}

/// Runs every stage on the fixture in replay mode, writing into `work_dir`.
pub fn run_fixture(work_dir: &Path) -> atlas::pipeline::RunSummary {
    let p = atlas::pipeline::Pipeline::from_config(fixture_config(work_dir)).expect("replay provider");
    p.run_all(&atlas::corpus::FixtureFetcher).expect("fixture run")
}

pub fn golden_path() -> PathBuf {
    fixture_dir().join("golden.json")
}

/// `artifact → sha256` of the exported graph and analysis in `work_dir`.
pub fn export_digests(work_dir: &Path) -> std::collections::BTreeMap<String, String> {
    [atlas::pipeline::GRAPH, atlas::pipeline::ANALYSIS]
        .iter()
        .map(|a| {
            let bytes = std::fs::read(work_dir.join(a)).expect("artifact");
            (a.to_string(), atlas::canonical::sha256_hex(&bytes))
        })
        .collect()
}

pub fn golden_digests() -> std::collections::BTreeMap<String, String> {
    let text = std::fs::read_to_string(golden_path()).expect("golden.json");
    serde_json::from_str(&text).expect("golden.json parses")
}
