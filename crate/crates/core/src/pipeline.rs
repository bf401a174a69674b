//! End-to-end stages. Each stage has an in-memory form and a file form that
//! reads and writes the artifacts of a work directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{AtlasConfig, ConfigError};
use crate::corpus::{
    dedupe_with_report, filter_corpus, ingest_all, CorpusFilter, IngestError, IngestReport, PaperRecord,
    SourceConfig, SourceDb, SourceFetcher,
};
use crate::extraction::{run_extraction, ExtractionConfig, ExtractionRun, RawTriplet};
use crate::graph::{build_graph, export_graph, import_graph, AtlasGraph};
use crate::netanalysis::{analyze, export_analysis, AnalysisConfig, AnalysisReport};
use crate::provider::{Mode, Provider, ReplayCache};
use crate::semantics::{
    self, apply_merge, build_merge_map, cluster_by_type, collect_keys, embed_keys, name_cluster, representatives,
    store, EmbeddingSet, MergeMap, SemanticsError, ThematicCluster, TypeSelection,
};
use crate::{canonical, jsonl};

pub const CORPUS: &str = "corpus.jsonl";
pub const INGEST_ERRORS: &str = "ingest_errors.jsonl";
pub const PAPERS: &str = "papers.jsonl";
pub const FILTER_REPORT: &str = "filter_report.json";
pub const FINDINGS: &str = "findings.jsonl";
pub const NOTES: &str = "notes.jsonl";
pub const TRIPLETS: &str = "triplets.jsonl";
pub const QUARANTINE: &str = "quarantine.jsonl";
pub const VECTORS: &str = "vectors.bin";
pub const MERGE_MAP: &str = "merge_map.json";
pub const MERGED_TRIPLETS: &str = "triplets.merged.jsonl";
pub const CLUSTERS: &str = "clusters.json";
pub const GRAPH: &str = "atlas.json";
pub const ANALYSIS: &str = "analysis.json";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Jsonl(#[from] jsonl::JsonlError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("{0}")]
    Provider(String),
}

type Result<T> = std::result::Result<T, PipelineError>;

/// Builds the provider named by the configuration. Live mode needs the
/// `live` feature and reads credentials from `ATLAS_API_KEY`.
pub fn make_provider(config: &AtlasConfig) -> Result<Provider> {
    let cache = Arc::new(ReplayCache::open(config.cache_dir()));
    let provider = match config.provider.mode {
        Mode::Replay => Provider::replay(cache),
        Mode::Live => live_provider(config, cache)?,
    };
    Ok(provider.with_retry(config.provider.retry))
}

#[cfg(feature = "live")]
fn live_provider(config: &AtlasConfig, cache: Arc<ReplayCache>) -> Result<Provider> {
    let key = std::env::var(crate::config::API_KEY_VAR)
        .map_err(|_| PipelineError::Provider(format!("live mode requires {}", crate::config::API_KEY_VAR)))?;
    let backend = crate::provider::http::HttpBackend::new(
        config.provider.messages_url.clone(),
        config.provider.embeddings_url.clone(),
        key,
    );
    Ok(Provider::live(cache, Arc::new(backend)))
}

#[cfg(not(feature = "live"))]
fn live_provider(_: &AtlasConfig, _: Arc<ReplayCache>) -> Result<Provider> {
    Err(PipelineError::Provider(
        "live mode is unavailable: built without the `live` feature".into(),
    ))
}

/// Fetches every configured source; records keep source order.
pub fn ingest(fetcher: &dyn SourceFetcher, sources: &[SourceConfig]) -> Result<(Vec<PaperRecord>, Vec<IngestError>)> {
    let outcomes = ingest_all(fetcher, sources).map_err(|source| PipelineError::Io {
        path: PathBuf::from("<sources>"),
        source,
    })?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for o in outcomes {
        records.extend(o.records);
        errors.extend(o.errors);
    }
    Ok((records, errors))
}

/// Filters, then deduplicates survivors. The report lists both kinds of drop.
pub fn filter(records: &[PaperRecord], filter: &CorpusFilter, priority: &[SourceDb]) -> (Vec<PaperRecord>, IngestReport) {
    let (kept, mut report) = filter_corpus(records, filter);
    let (unique, dropped) = dedupe_with_report(&kept, priority);
    report.dropped.extend(dropped);
    report.kept = unique.len();
    (unique, report)
}

pub fn extract(papers: &[PaperRecord], provider: &Provider, config: &ExtractionConfig) -> ExtractionRun {
    run_extraction(papers, provider, config)
}

#[derive(Debug, Clone)]
pub struct MergeOutput {
    pub embeddings: EmbeddingSet,
    pub map: MergeMap,
    pub triplets: Vec<RawTriplet>,
}

/// Embeds every key of `triplets`, merges near-synonyms and rewrites the
/// triplets onto canonical keys.
pub fn merge(triplets: &[RawTriplet], provider: &Provider, model: &str, eps: f64, min_pts: usize) -> Result<MergeOutput> {
    let keys = collect_keys(triplets);
    let embeddings = embed_keys(&keys, provider, model)?;
    let map = if embeddings.is_empty() {
        MergeMap::default()
    } else {
        build_merge_map(&embeddings, eps, min_pts)?
    };
    let triplets = apply_merge(triplets, &map);
    Ok(MergeOutput { embeddings, map, triplets })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutput {
    pub clusters: Vec<ThematicCluster>,
    pub selections: Vec<TypeSelection>,
}

/// Clusters the keys of merged triplets by type. With a provider, each
/// cluster is named from its nearest-centroid members.
pub fn cluster(
    triplets: &[RawTriplet],
    embeddings: &EmbeddingSet,
    config: &semantics::ClusterConfig,
    naming: Option<(&Provider, &str)>,
) -> Result<ClusterOutput> {
    let keys = collect_keys(triplets);
    if keys.is_empty() {
        return Ok(ClusterOutput {
            clusters: Vec::new(),
            selections: Vec::new(),
        });
    }
    let set = embeddings.subset(&keys)?;
    let (mut clusters, selections) = cluster_by_type(&set, config)?;
    for c in &mut clusters {
        let terms: Vec<String> = representatives(&c.members, &set, semantics::NAMING_REPRESENTATIVES)?
            .iter()
            .map(|k| k.canonical())
            .collect();
        let named = name_cluster(c, &terms, naming.map(|(p, _)| p), naming.map_or("", |(_, m)| m));
        c.name = Some(named.name);
        c.description = Some(named.description).filter(|d| !d.is_empty());
    }
    Ok(ClusterOutput { clusters, selections })
}

pub fn build(triplets: &[RawTriplet], clusters: &[ThematicCluster], papers: &[PaperRecord], threshold: usize) -> AtlasGraph {
    build_graph(triplets, threshold).with_clusters(clusters).with_papers(papers)
}

/// Artifact locations inside one work directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workspace {
    pub dir: PathBuf,
}

impl Workspace {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, artifact: &str) -> PathBuf {
        self.dir.join(artifact)
    }

    fn ensure(&self) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|source| PipelineError::Io {
            path: self.dir.clone(),
            source,
        })
    }

    pub fn read_jsonl<T: DeserializeOwned>(&self, artifact: &str) -> Result<Vec<T>> {
        Ok(jsonl::read(&self.path(artifact))?)
    }

    pub fn write_jsonl<T: Serialize>(&self, artifact: &str, items: &[T]) -> Result<()> {
        self.ensure()?;
        Ok(jsonl::write(&self.path(artifact), items)?)
    }

    pub fn read_json<T: DeserializeOwned>(&self, artifact: &str) -> Result<T> {
        let path = self.path(artifact);
        let bytes = read_bytes(&path)?;
        serde_json::from_slice(&bytes).map_err(|source| PipelineError::Json { path, source })
    }

    pub fn write_json<T: Serialize>(&self, artifact: &str, value: &T) -> Result<()> {
        self.write_bytes(artifact, &canonical::to_bytes(value))
    }

    pub fn write_bytes(&self, artifact: &str, bytes: &[u8]) -> Result<()> {
        self.ensure()?;
        let path = self.path(artifact);
        std::fs::write(&path, bytes).map_err(|source| PipelineError::Io { path, source })
    }

    pub fn read_graph(&self) -> Result<AtlasGraph> {
        let path = self.path(GRAPH);
        let graph = import_graph(&read_bytes(&path)?).map_err(|source| PipelineError::Json { path, source })?;
        let problems = graph.validate();
        if problems.is_empty() {
            Ok(graph)
        } else {
            Err(PipelineError::InvalidGraph(problems.join("; ")))
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Counts reported after a full run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub ingested: usize,
    pub ingest_errors: usize,
    pub papers: usize,
    pub findings: usize,
    pub notes: usize,
    pub triplets: usize,
    pub quarantined: usize,
    pub keys: usize,
    pub merged_keys: usize,
    pub clusters: usize,
    pub nodes: usize,
    pub edges: usize,
    pub communities: usize,
}

/// The file-backed pipeline: a configuration, its provider and work directory.
pub struct Pipeline {
    pub config: AtlasConfig,
    pub provider: Provider,
    pub workspace: Workspace,
}

impl Pipeline {
    pub fn new(config: AtlasConfig, provider: Provider) -> Self {
        let workspace = Workspace::new(&config.work_dir);
        Self {
            config,
            provider,
            workspace,
        }
    }

    pub fn from_config(config: AtlasConfig) -> Result<Self> {
        let provider = make_provider(&config)?;
        Ok(Self::new(config, provider))
    }

    pub fn ingest(&self, fetcher: &dyn SourceFetcher) -> Result<(usize, usize)> {
        let (records, errors) = ingest(fetcher, &self.config.corpus.sources)?;
        for e in &errors {
            log::warn!("{e}");
        }
        self.workspace.write_jsonl(CORPUS, &records)?;
        let messages: Vec<String> = errors.iter().map(ToString::to_string).collect();
        self.workspace.write_jsonl(INGEST_ERRORS, &messages)?;
        Ok((records.len(), errors.len()))
    }

    pub fn filter(&self) -> Result<IngestReport> {
        let records: Vec<PaperRecord> = self.workspace.read_jsonl(CORPUS)?;
        let (papers, report) = filter(&records, &self.config.corpus.filter, &self.config.corpus.priority);
        self.workspace.write_jsonl(PAPERS, &papers)?;
        self.workspace.write_json(FILTER_REPORT, &report)?;
        Ok(report)
    }

    pub fn extract(&self) -> Result<ExtractionRun> {
        let papers: Vec<PaperRecord> = self.workspace.read_jsonl(PAPERS)?;
        let run = extract(&papers, &self.provider, &self.config.extraction.to_config()?);
        self.workspace.write_jsonl(FINDINGS, &run.findings)?;
        self.workspace.write_jsonl(NOTES, &run.notes)?;
        self.workspace.write_jsonl(TRIPLETS, &run.triplets)?;
        self.workspace.write_jsonl(QUARANTINE, &run.quarantine)?;
        Ok(run)
    }

    pub fn merge(&self) -> Result<MergeOutput> {
        let triplets: Vec<RawTriplet> = self.workspace.read_jsonl(TRIPLETS)?;
        let s = &self.config.semantics;
        let out = merge(&triplets, &self.provider, &s.embedding_model, s.eps, s.min_pts)?;
        store::save(&out.embeddings, &self.workspace.path(VECTORS))?;
        self.workspace.write_json(MERGE_MAP, &out.map)?;
        self.workspace.write_jsonl(MERGED_TRIPLETS, &out.triplets)?;
        Ok(out)
    }

    pub fn cluster(&self) -> Result<ClusterOutput> {
        let triplets: Vec<RawTriplet> = self.workspace.read_jsonl(MERGED_TRIPLETS)?;
        let embeddings = store::load(&self.workspace.path(VECTORS))?;
        let s = &self.config.semantics;
        let naming = s.name_clusters.then_some((&self.provider, s.naming_model.as_str()));
        let out = cluster(&triplets, &embeddings, &s.cluster_config(), naming)?;
        self.workspace.write_json(CLUSTERS, &out)?;
        Ok(out)
    }

    pub fn build_graph(&self) -> Result<AtlasGraph> {
        let triplets: Vec<RawTriplet> = self.workspace.read_jsonl(MERGED_TRIPLETS)?;
        let clusters: ClusterOutput = self.workspace.read_json(CLUSTERS)?;
        let papers: Vec<PaperRecord> = self.workspace.read_jsonl(PAPERS)?;
        let graph = build(&triplets, &clusters.clusters, &papers, self.config.graph.threshold);
        self.workspace.write_bytes(GRAPH, &export_graph(&graph))?;
        Ok(graph)
    }

    pub fn analyze(&self) -> Result<AnalysisReport> {
        let graph = self.workspace.read_graph()?;
        let report = analyze(
            &graph,
            &AnalysisConfig {
                seed: self.config.analysis.seed,
                score_formula: self.config.analysis.score_formula,
            },
        );
        self.workspace.write_bytes(ANALYSIS, &export_analysis(&report))?;
        Ok(report)
    }

    /// Every stage in order, starting from the configured sources.
    pub fn run_all(&self, fetcher: &dyn SourceFetcher) -> Result<RunSummary> {
        let (ingested, ingest_errors) = self.ingest(fetcher)?;
        let report = self.filter()?;
        let run = self.extract()?;
        let merged = self.merge()?;
        let clusters = self.cluster()?;
        let graph = self.build_graph()?;
        let analysis = self.analyze()?;
        Ok(RunSummary {
            ingested,
            ingest_errors,
            papers: report.kept,
            findings: run.findings.len(),
            notes: run.notes.len(),
            triplets: run.triplets.len(),
            quarantined: run.quarantine.len(),
            keys: merged.embeddings.len(),
            merged_keys: collect_keys(&merged.triplets).len(),
            clusters: clusters.clusters.len(),
            nodes: graph.nodes.len(),
            edges: graph.edges.len(),
            communities: analysis.summary.num_communities,
        })
    }
}
