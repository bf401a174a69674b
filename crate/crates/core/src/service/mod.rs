//! Read-only access to a published graph: snapshots, flow aggregation and
//! search. The HTTP layer lives in [`api`].

pub mod api;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::corpus::PaperRecord;
use crate::graph::{export_graph, import_graph, AtlasEdge, AtlasGraph, AtlasNode};
use crate::netanalysis::AnalysisReport;
use crate::notation::{EntityType, Relationship};

/// Findings quoted per flow row.
pub const FLOW_SAMPLES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    InvalidRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("unknown cluster `{0}`")]
    UnknownCluster(String),
    #[error("{0}")]
    Load(String),
}

/// Splits text into lowercase alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HitKind {
    Node,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub kind: HitKind,
    pub id: String,
    /// Occurrences of query tokens among the item's tokens.
    pub score: usize,
}

/// Token counts for nodes (the id, which contains the label) and papers
/// (title and abstract).
#[derive(Debug, Clone, Default)]
pub struct SearchIndex {
    entries: Vec<(HitKind, String, BTreeMap<String, usize>)>,
}

impl SearchIndex {
    pub fn build(graph: &AtlasGraph) -> Self {
        let count = |texts: &[&str]| {
            let mut m = BTreeMap::new();
            for t in texts {
                for tok in tokenize(t) {
                    *m.entry(tok).or_insert(0) += 1;
                }
            }
            m
        };
        let mut entries: Vec<_> = graph
            .nodes
            .iter()
            .map(|n| (HitKind::Node, n.id.clone(), count(&[&n.id])))
            .collect();
        entries.extend(graph.papers.iter().map(|p| {
            (
                HitKind::Paper,
                p.id.clone(),
                count(&[&p.title, p.abstract_text.as_deref().unwrap_or("")]),
            )
        }));
        Self { entries }
    }

    /// Items sharing at least one token with `query`, highest score first,
    /// ties by id then kind.
    pub fn search(&self, query: &str) -> Result<Vec<SearchHit>, ServiceError> {
        let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
        if terms.is_empty() {
            return Err(ServiceError::InvalidRequest("query must contain at least one word".into()));
        }
        let mut hits: Vec<SearchHit> = self
            .entries
            .iter()
            .filter_map(|(kind, id, toks)| {
                let score: usize = terms.iter().filter_map(|t| toks.get(t)).sum();
                (score > 0).then(|| SearchHit {
                    kind: *kind,
                    id: id.clone(),
                    score,
                })
            })
            .collect();
        hits.sort_by(|a, b| b.score.cmp(&a.score).then(a.id.cmp(&b.id)).then(a.kind.cmp(&b.kind)));
        Ok(hits)
    }
}

/// An immutable view of one published graph and its analysis.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub graph: AtlasGraph,
    pub analysis: Option<AnalysisReport>,
    pub index: SearchIndex,
    /// Short digest of the graph export; paging cursors are bound to it.
    pub version: String,
}

impl Snapshot {
    pub fn new(graph: AtlasGraph, analysis: Option<AnalysisReport>) -> Self {
        let version = canonical::sha256_hex(&export_graph(&graph))[..16].to_string();
        Self {
            index: SearchIndex::build(&graph),
            graph,
            analysis,
            version,
        }
    }

    pub fn node(&self, id: &str) -> Option<&AtlasNode> {
        self.graph.node(id)
    }

    pub fn paper(&self, id: &str) -> Option<&PaperRecord> {
        self.graph.papers.iter().find(|p| p.id == id)
    }
}

/// Files a snapshot is (re)loaded from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotSource {
    pub graph: PathBuf,
    pub analysis: Option<PathBuf>,
}

impl SnapshotSource {
    pub fn load(&self) -> Result<Snapshot, ServiceError> {
        let read = |p: &PathBuf| std::fs::read(p).map_err(|e| ServiceError::Load(format!("{}: {e}", p.display())));
        let graph = import_graph(&read(&self.graph)?)
            .map_err(|e| ServiceError::Load(format!("{}: {e}", self.graph.display())))?;
        let problems = graph.validate();
        if !problems.is_empty() {
            return Err(ServiceError::Load(problems.join("; ")));
        }
        let analysis = match &self.analysis {
            Some(p) if p.exists() => Some(
                serde_json::from_slice(&read(p)?).map_err(|e| ServiceError::Load(format!("{}: {e}", p.display())))?,
            ),
            _ => None,
        };
        Ok(Snapshot::new(graph, analysis))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Node,
    #[default]
    ThematicCluster,
}

impl std::str::FromStr for GroupBy {
    type Err = ServiceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "node" => Ok(GroupBy::Node),
            "thematic_cluster" | "cluster" => Ok(GroupBy::ThematicCluster),
            other => Err(ServiceError::InvalidRequest(format!("unknown group_by `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowFilter {
    pub cause_type: Option<EntityType>,
    pub effect_type: Option<EntityType>,
    pub relationship: Option<Relationship>,
    /// Keep edges with either endpoint in this thematic cluster.
    pub cluster: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSample {
    pub paper_id: String,
    pub finding: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRow {
    pub source: String,
    pub relationship: Relationship,
    pub target: String,
    pub count: usize,
    pub samples: Vec<FlowSample>,
}

/// Group of a node under `group_by`; unclustered nodes fall into
/// `<type>-unclustered`.
pub fn group_of(node: &AtlasNode, group_by: GroupBy) -> String {
    match group_by {
        GroupBy::Node => node.id.clone(),
        GroupBy::ThematicCluster => node
            .thematic_cluster
            .clone()
            .unwrap_or_else(|| format!("{}-unclustered", node.entity_type)),
    }
}

fn edge_matches(graph: &AtlasGraph, e: &AtlasEdge, filter: &FlowFilter) -> bool {
    let (Some(s), Some(t)) = (graph.node(&e.source), graph.node(&e.target)) else {
        return false;
    };
    filter.cause_type.is_none_or(|ty| s.entity_type == ty)
        && filter.effect_type.is_none_or(|ty| t.entity_type == ty)
        && filter.relationship.is_none_or(|r| e.relationship == r)
        && filter.cluster.as_ref().is_none_or(|c| {
            s.thematic_cluster.as_ref() == Some(c) || t.thematic_cluster.as_ref() == Some(c)
        })
}

/// Sums matching edge weights per `(source group, relationship, target
/// group)`. Rows are ordered by count (descending), then ids.
pub fn aggregate_flows(graph: &AtlasGraph, group_by: GroupBy, filter: &FlowFilter) -> Result<Vec<FlowRow>, ServiceError> {
    if let Some(c) = &filter.cluster {
        if !graph.clusters.iter().any(|k| &k.id == c) {
            return Err(ServiceError::UnknownCluster(c.clone()));
        }
    }
    let mut rows: BTreeMap<(String, Relationship, String), FlowRow> = BTreeMap::new();
    for e in graph.edges.iter().filter(|e| edge_matches(graph, e, filter)) {
        let s = group_of(graph.node(&e.source).expect("checked"), group_by);
        let t = group_of(graph.node(&e.target).expect("checked"), group_by);
        let row = rows.entry((s.clone(), e.relationship, t.clone())).or_insert_with(|| FlowRow {
            source: s,
            relationship: e.relationship,
            target: t,
            count: 0,
            samples: Vec::new(),
        });
        row.count += e.weight;
        for f in &e.findings {
            if row.samples.len() < FLOW_SAMPLES {
                row.samples.push(FlowSample {
                    paper_id: f.paper_id.clone(),
                    finding: f.text.clone(),
                });
            }
        }
    }
    let mut out: Vec<FlowRow> = rows.into_values().collect();
    out.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| (&a.source, a.relationship, &a.target).cmp(&(&b.source, b.relationship, &b.target)))
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSlice {
    pub nodes: Vec<AtlasNode>,
    pub edges: Vec<AtlasEdge>,
    pub filter: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SliceFilter {
    pub cluster: Option<String>,
    pub entity_type: Option<EntityType>,
    pub query: Option<String>,
}

/// Nodes passing every given filter and the edges between them.
pub fn graph_slice(snapshot: &Snapshot, filter: &SliceFilter) -> Result<GraphSlice, ServiceError> {
    let graph = &snapshot.graph;
    if let Some(c) = &filter.cluster {
        if !graph.clusters.iter().any(|k| &k.id == c) {
            return Err(ServiceError::UnknownCluster(c.clone()));
        }
    }
    let matched: Option<BTreeSet<String>> = match &filter.query {
        Some(q) => Some(
            snapshot
                .index
                .search(q)?
                .into_iter()
                .filter(|h| h.kind == HitKind::Node)
                .map(|h| h.id)
                .collect(),
        ),
        None => None,
    };
    let nodes: Vec<AtlasNode> = graph
        .nodes
        .iter()
        .filter(|n| filter.entity_type.is_none_or(|t| n.entity_type == t))
        .filter(|n| filter.cluster.as_ref().is_none_or(|c| n.thematic_cluster.as_ref() == Some(c)))
        .filter(|n| matched.as_ref().is_none_or(|m| m.contains(&n.id)))
        .cloned()
        .collect();
    let ids: BTreeSet<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
    let edges = graph
        .edges
        .iter()
        .filter(|e| ids.contains(e.source.as_str()) && ids.contains(e.target.as_str()))
        .cloned()
        .collect();
    let mut parts = Vec::new();
    if let Some(c) = &filter.cluster {
        parts.push(format!("cluster={c}"));
    }
    if let Some(t) = filter.entity_type {
        parts.push(format!("type={t}"));
    }
    if let Some(q) = &filter.query {
        parts.push(format!("q={q}"));
    }
    Ok(GraphSlice {
        nodes,
        edges,
        filter: if parts.is_empty() { "all".into() } else { parts.join("&") },
    })
}
