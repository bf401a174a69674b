//! The findings graph: nodes are entity keys, edges collapse parallel
//! findings, and heavily shared features become standalone nodes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::corpus::PaperRecord;
use crate::extraction::RawTriplet;
use crate::notation::{parse_key, EntityKey, EntityType, Feature, Outcome, Relationship};
use crate::semantics::ThematicCluster;

pub const SCHEMA_VERSION: &str = "1.0";
pub const DEFAULT_THRESHOLD: usize = 5;
pub const SCHEMA: &str = include_str!("../schema/atlas-graph.schema.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtlasNode {
    pub id: String,
    pub entity_type: EntityType,
    pub label: String,
    pub thematic_cluster: Option<String>,
    pub is_split_feature: bool,
}

/// One finding carried by an edge, with the keys it had before rewiring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeFinding {
    pub finding_id: String,
    pub paper_id: String,
    pub text: String,
    pub net_outcome: Outcome,
    pub cause: EntityKey,
    pub effect: EntityKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtlasEdge {
    pub id: String,
    pub source: String,
    pub target: String,
    pub relationship: Relationship,
    /// Shared outcome of all findings, `undetermined` when they differ.
    pub net_outcome: Outcome,
    pub outcomes: BTreeMap<Outcome, usize>,
    pub weight: usize,
    pub is_self_loop: bool,
    pub findings: Vec<EdgeFinding>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub schema_version: String,
    pub threshold: usize,
    pub node_count: usize,
    pub edge_count: usize,
    pub finding_count: usize,
    /// Digests of the canonical form of each input, keyed by input name.
    pub provenance: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtlasGraph {
    pub meta: GraphMeta,
    pub nodes: Vec<AtlasNode>,
    pub edges: Vec<AtlasEdge>,
    pub clusters: Vec<ThematicCluster>,
    #[serde(default)]
    pub papers: Vec<PaperRecord>,
}

pub fn edge_id(source: &str, relationship: Relationship, target: &str) -> String {
    format!("{source} -[{relationship}]-> {target}")
}

/// Display label: the key without its `type:` prefix.
pub fn node_label(key: &EntityKey) -> String {
    let id = key.canonical();
    let ty = key.entity_type.as_str();
    let rest = id.strip_prefix(ty).unwrap_or(&id);
    let rest = rest.strip_prefix(':').or_else(|| rest.strip_prefix('>')).unwrap_or(rest);
    if rest.is_empty() {
        id
    } else {
        rest.to_string()
    }
}

/// Identity of a feature for splitting; specificity is ignored.
type FeatureId = (EntityType, bool, String);

fn feature_id(key: &EntityKey) -> Option<FeatureId> {
    key.feature
        .as_ref()
        .map(|f| (key.entity_type, f.is_perception, f.name.clone()))
}

/// Features attached to at least `threshold` distinct entity parts.
pub fn split_features(triplets: &[RawTriplet], threshold: usize) -> BTreeSet<FeatureId> {
    let mut owners: BTreeMap<FeatureId, BTreeSet<EntityKey>> = BTreeMap::new();
    for t in triplets {
        for key in [&t.cause, &t.effect] {
            if let Some(fid) = feature_id(key) {
                owners.entry(fid).or_default().insert(key.entity_part());
            }
        }
    }
    owners
        .into_iter()
        .filter(|(_, o)| o.len() >= threshold)
        .map(|(f, _)| f)
        .collect()
}

/// The node a key lands on: the bare `type>feature` node when its feature is
/// split, the key itself otherwise.
fn node_key(key: &EntityKey, split: &BTreeSet<FeatureId>) -> (EntityKey, bool) {
    match (feature_id(key), &key.feature) {
        (Some(fid), Some(f)) if split.contains(&fid) => (
            EntityKey {
                entity_type: key.entity_type,
                subtype: None,
                feature: Some(Feature {
                    name: f.name.clone(),
                    specificity: None,
                    is_perception: f.is_perception,
                }),
            },
            true,
        ),
        _ => (key.clone(), false),
    }
}

pub fn build_graph(triplets: &[RawTriplet], threshold: usize) -> AtlasGraph {
    let split = split_features(triplets, threshold);
    let mut nodes: BTreeMap<String, AtlasNode> = BTreeMap::new();
    let mut edges: BTreeMap<(String, String, Relationship), Vec<EdgeFinding>> = BTreeMap::new();

    for t in triplets {
        let mut ends = [String::new(), String::new()];
        for (slot, key) in ends.iter_mut().zip([&t.cause, &t.effect]) {
            let (nk, is_split) = node_key(key, &split);
            let id = nk.canonical();
            let node = nodes.entry(id.clone()).or_insert_with(|| AtlasNode {
                id: id.clone(),
                entity_type: nk.entity_type,
                label: node_label(&nk),
                thematic_cluster: None,
                is_split_feature: false,
            });
            node.is_split_feature |= is_split;
            *slot = id;
        }
        let [source, target] = ends;
        edges.entry((source, target, t.relationship)).or_default().push(EdgeFinding {
            finding_id: t.finding_id.clone(),
            paper_id: t.paper_id.clone(),
            text: t.finding.clone(),
            net_outcome: t.net_outcome,
            cause: t.cause.clone(),
            effect: t.effect.clone(),
        });
    }

    let edges: Vec<AtlasEdge> = edges
        .into_iter()
        .map(|((source, target, relationship), mut findings)| {
            findings.sort_by(|a, b| (&a.finding_id, &a.paper_id, &a.text).cmp(&(&b.finding_id, &b.paper_id, &b.text)));
            let mut outcomes = BTreeMap::new();
            for f in &findings {
                *outcomes.entry(f.net_outcome).or_insert(0) += 1;
            }
            let net_outcome = if outcomes.len() == 1 {
                *outcomes.keys().next().expect("one outcome")
            } else {
                Outcome::Undetermined
            };
            AtlasEdge {
                id: edge_id(&source, relationship, &target),
                is_self_loop: source == target,
                source,
                target,
                relationship,
                net_outcome,
                outcomes,
                weight: findings.len(),
                findings,
            }
        })
        .collect();

    let mut provenance = BTreeMap::new();
    let mut sorted: Vec<&RawTriplet> = triplets.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.paper_id, &a.finding_id, &a.finding, &a.cause, a.relationship, &a.effect, a.net_outcome).cmp(&(
            &b.paper_id,
            &b.finding_id,
            &b.finding,
            &b.cause,
            b.relationship,
            &b.effect,
            b.net_outcome,
        ))
    });
    provenance.insert("triplets".to_string(), canonical::digest(&sorted));
    let mut graph = AtlasGraph {
        meta: GraphMeta {
            schema_version: SCHEMA_VERSION.to_string(),
            threshold,
            node_count: nodes.len(),
            edge_count: edges.len(),
            finding_count: triplets.len(),
            provenance,
        },
        nodes: nodes.into_values().collect(),
        edges,
        clusters: Vec::new(),
        papers: Vec::new(),
    };
    graph.sort();
    graph
}

impl AtlasGraph {
    pub fn empty() -> Self {
        build_graph(&[], DEFAULT_THRESHOLD)
    }

    fn sort(&mut self) {
        self.nodes.sort_by(|a, b| a.id.cmp(&b.id));
        self.edges.sort_by(|a, b| a.id.cmp(&b.id));
        self.clusters.sort_by(|a, b| a.id.cmp(&b.id));
        self.papers.sort_by(|a, b| a.id.cmp(&b.id));
    }

    /// Attaches thematic clusters; a node takes the cluster of the key it is
    /// named after, if any.
    pub fn with_clusters(mut self, clusters: &[ThematicCluster]) -> Self {
        let by_key: BTreeMap<String, &str> = clusters
            .iter()
            .flat_map(|c| c.members.iter().map(move |m| (m.canonical(), c.id.as_str())))
            .collect();
        for n in &mut self.nodes {
            n.thematic_cluster = by_key.get(&n.id).map(|s| s.to_string());
        }
        self.clusters = clusters.to_vec();
        self.meta
            .provenance
            .insert("clusters".to_string(), canonical::digest(&self.clusters));
        self.sort();
        self
    }

    /// Attaches the papers referenced by at least one edge.
    pub fn with_papers(mut self, papers: &[PaperRecord]) -> Self {
        let cited: BTreeSet<&str> = self
            .edges
            .iter()
            .flat_map(|e| e.findings.iter().map(|f| f.paper_id.as_str()))
            .collect();
        self.papers = papers.iter().filter(|p| cited.contains(p.id.as_str())).cloned().collect();
        self.meta
            .provenance
            .insert("papers".to_string(), canonical::digest(&self.papers));
        self.sort();
        self
    }

    pub fn node(&self, id: &str) -> Option<&AtlasNode> {
        self.nodes
            .binary_search_by(|n| n.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn total_weight(&self) -> usize {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Structural problems; empty for a well-formed graph.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let ids: BTreeSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        if ids.len() != self.nodes.len() {
            problems.push("duplicate node ids".to_string());
        }
        for n in &self.nodes {
            if parse_key(&n.id).map(|k| k.canonical()).as_deref() != Ok(n.id.as_str()) {
                problems.push(format!("node id `{}` is not a canonical key", n.id));
            }
        }
        let cluster_ids: BTreeSet<&str> = self.clusters.iter().map(|c| c.id.as_str()).collect();
        for n in &self.nodes {
            if let Some(c) = &n.thematic_cluster {
                if !cluster_ids.contains(c.as_str()) {
                    problems.push(format!("node `{}` names unknown cluster `{c}`", n.id));
                }
            }
        }
        for e in &self.edges {
            if !ids.contains(e.source.as_str()) || !ids.contains(e.target.as_str()) {
                problems.push(format!("edge `{}` has a dangling endpoint", e.id));
            }
            if e.weight == 0 || e.weight != e.findings.len() {
                problems.push(format!("edge `{}` weight disagrees with its findings", e.id));
            }
        }
        problems
    }
}

/// Canonical export bytes.
pub fn export_graph(graph: &AtlasGraph) -> Vec<u8> {
    canonical::to_bytes(graph)
}

pub fn import_graph(bytes: &[u8]) -> Result<AtlasGraph, serde_json::Error> {
    serde_json::from_slice(bytes)
}
