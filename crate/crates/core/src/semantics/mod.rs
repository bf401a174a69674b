//! Key embeddings, synonym merging and thematic clustering.

pub mod dbscan;
pub mod kmeans;
pub mod merge;
pub mod naming;
pub mod store;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::extraction::RawTriplet;
use crate::notation::{EntityKey, EntityType};
use crate::provider::{Provider, ProviderError};

pub use dbscan::{dbscan, DbscanLabels};
pub use kmeans::{kmeans, select_k, silhouette_score, KMeansOptions, KMeansResult, KSelection};
pub use merge::{apply_merge, build_merge_map, canonical_representative, MergeCluster, MergeMap};
pub use naming::name_cluster;

pub const DEFAULT_EMBEDDING_MODEL: &str = "Qwen3-Embedding-8B";
pub const DEFAULT_EPS: f64 = 0.2;
pub const DEFAULT_MIN_PTS: usize = 2;
pub const DEFAULT_K_MIN: usize = 2;
pub const DEFAULT_K_MAX: usize = 15;
pub const DISPLAY_REPRESENTATIVES: usize = 5;
pub const NAMING_REPRESENTATIVES: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum SemanticsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("k = {k} is outside 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("need at least {needed} vectors, got {got}")]
    TooFewVectors { needed: usize, got: usize },
    #[error("non-finite value in embedding of `{0}`")]
    NonFinite(String),
    #[error("{0} keys but {1} vectors")]
    LengthMismatch(usize, usize),
    #[error("no embedding for `{0}`")]
    MissingKey(String),
    #[error("vector store: {0}")]
    Store(String),
    #[error("embedding `{key}`: {source}")]
    Provider {
        key: String,
        #[source]
        source: ProviderError,
    },
}

/// Embeddings for a set of keys, row `i` belonging to `keys[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub model: String,
    pub dim: usize,
    pub keys: Vec<EntityKey>,
    pub vectors: Vec<Vec<f64>>,
}

impl EmbeddingSet {
    pub fn new(keys: Vec<EntityKey>, vectors: Vec<Vec<f64>>, model: String) -> Result<Self, SemanticsError> {
        if keys.len() != vectors.len() {
            return Err(SemanticsError::LengthMismatch(keys.len(), vectors.len()));
        }
        let dim = check_dims(&vectors)?;
        for (k, v) in keys.iter().zip(&vectors) {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(SemanticsError::NonFinite(k.canonical()));
            }
        }
        Ok(Self { model, dim, keys, vectors })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn index(&self) -> BTreeMap<&EntityKey, usize> {
        self.keys.iter().enumerate().map(|(i, k)| (k, i)).collect()
    }

    /// Copy with every row scaled to unit length.
    pub fn normalized(&self) -> Self {
        Self {
            model: self.model.clone(),
            dim: self.dim,
            keys: self.keys.clone(),
            vectors: self.vectors.iter().map(|v| normalize(v)).collect(),
        }
    }

    /// Rows for `keys`, in the given order.
    pub fn subset(&self, keys: &[EntityKey]) -> Result<Self, SemanticsError> {
        let index = self.index();
        let vectors = keys
            .iter()
            .map(|k| {
                index
                    .get(k)
                    .map(|&i| self.vectors[i].clone())
                    .ok_or_else(|| SemanticsError::MissingKey(k.canonical()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            model: self.model.clone(),
            dim: self.dim,
            keys: keys.to_vec(),
            vectors,
        })
    }
}

/// Shared dimension of `vectors` (0 when empty).
pub fn check_dims(vectors: &[Vec<f64>]) -> Result<usize, SemanticsError> {
    let Some(first) = vectors.first() else {
        return Ok(0);
    };
    let expected = first.len();
    for v in vectors {
        if v.len() != expected {
            return Err(SemanticsError::DimensionMismatch {
                expected,
                found: v.len(),
            });
        }
    }
    Ok(expected)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    if n > 0.0 {
        a.iter().map(|x| x / n).collect()
    } else {
        a.to_vec()
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let d = norm(a) * norm(b);
    if d > 0.0 {
        (dot(a, b) / d).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

/// `1 - cos(a, b)`, in `[0, 2]`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    1.0 - cosine_similarity(a, b)
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Distinct cause and effect keys in canonical order.
pub fn collect_keys<'a>(triplets: impl IntoIterator<Item = &'a RawTriplet>) -> Vec<EntityKey> {
    let set: BTreeSet<&EntityKey> = triplets
        .into_iter()
        .flat_map(|t| [&t.cause, &t.effect])
        .collect();
    set.into_iter().cloned().collect()
}

/// Embeds each key's canonical string through the provider.
pub fn embed_keys(keys: &[EntityKey], provider: &Provider, model: &str) -> Result<EmbeddingSet, SemanticsError> {
    let vectors = keys
        .iter()
        .map(|k| {
            provider
                .embed(model, &k.canonical())
                .map(|v| v.into_iter().map(f64::from).collect())
                .map_err(|source| SemanticsError::Provider {
                    key: k.canonical(),
                    source,
                })
        })
        .collect::<Result<Vec<Vec<f64>>, _>>()?;
    EmbeddingSet::new(keys.to_vec(), vectors, model.to_string())
}

/// A k-means group of keys of one entity type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThematicCluster {
    /// Type initial plus index, e.g. `h0`, `a3`, `c1`.
    pub id: String,
    pub entity_type: EntityType,
    pub members: Vec<EntityKey>,
    /// Nearest-centroid first.
    pub representatives: Vec<EntityKey>,
    pub name: Option<String>,
    pub description: Option<String>,
}

impl ThematicCluster {
    pub fn index(&self) -> usize {
        self.id[1..].parse().unwrap_or(0)
    }

    pub fn placeholder_name(&self) -> String {
        format!("cluster-{}-{}", self.entity_type, self.index())
    }
}

pub fn cluster_id(entity_type: EntityType, index: usize) -> String {
    let initial = match entity_type {
        EntityType::Human => 'h',
        EntityType::Ai => 'a',
        EntityType::Co => 'c',
    };
    format!("{initial}{index}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
    pub restarts: usize,
    pub display_representatives: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k_min: DEFAULT_K_MIN,
            k_max: DEFAULT_K_MAX,
            seed: 0,
            restarts: 10,
            display_representatives: DISPLAY_REPRESENTATIVES,
        }
    }
}

/// Per-type outcome of [`cluster_by_type`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeSelection {
    pub entity_type: EntityType,
    pub n: usize,
    pub k: usize,
    pub silhouette: Vec<(usize, f64)>,
}

/// Splits keys by entity type and runs silhouette-selected k-means on the
/// unit-normalized vectors of each type. Types with fewer than three keys
/// form a single cluster.
pub fn cluster_by_type(
    set: &EmbeddingSet,
    config: &ClusterConfig,
) -> Result<(Vec<ThematicCluster>, Vec<TypeSelection>), SemanticsError> {
    let unit = set.normalized();
    let opts = KMeansOptions {
        restarts: config.restarts,
        ..KMeansOptions::default()
    };
    let mut clusters = Vec::new();
    let mut selections = Vec::new();
    for ty in EntityType::ALL {
        let mut keys: Vec<EntityKey> = unit.keys.iter().filter(|k| k.entity_type == ty).cloned().collect();
        if keys.is_empty() {
            continue;
        }
        keys.sort();
        let sub = unit.subset(&keys)?;
        let (assignment, k, silhouette) = if sub.len() < 3 {
            (vec![0; sub.len()], 1, Vec::new())
        } else {
            let sel = select_k(&sub.vectors, config.k_min, config.k_max, config.seed, opts)?;
            let r = kmeans(&sub.vectors, sel.k, config.seed, opts)?;
            (r.assignment, sel.k, sel.scores)
        };
        selections.push(TypeSelection {
            entity_type: ty,
            n: sub.len(),
            k,
            silhouette,
        });
        let groups = (0..k).map(|c| (0..sub.len()).filter(|&i| assignment[i] == c).collect::<Vec<_>>());
        for (c, members) in groups.enumerate().filter(|(_, m)| !m.is_empty()) {
            let reps = kmeans::nearest_to_centroid(&sub.vectors, &members, config.display_representatives);
            clusters.push(ThematicCluster {
                id: cluster_id(ty, c),
                entity_type: ty,
                members: members.iter().map(|&i| sub.keys[i].clone()).collect(),
                representatives: reps.into_iter().map(|i| sub.keys[i].clone()).collect(),
                name: None,
                description: None,
            });
        }
    }
    Ok((clusters, selections))
}

/// Cluster members ordered by Euclidean distance to the centroid of their
/// unit-normalized vectors, first `n`.
pub fn representatives(cluster: &[EntityKey], set: &EmbeddingSet, n: usize) -> Result<Vec<EntityKey>, SemanticsError> {
    let sub = set.subset(cluster)?.normalized();
    let all: Vec<usize> = (0..sub.len()).collect();
    Ok(kmeans::nearest_to_centroid(&sub.vectors, &all, n)
        .into_iter()
        .map(|i| sub.keys[i].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::{parse_key, Outcome, Relationship};

    fn triplet(cause: &str, effect: &str) -> RawTriplet {
        RawTriplet {
            finding_id: "p#f1".into(),
            paper_id: "p".into(),
            finding: "f".into(),
            cause: parse_key(cause).unwrap(),
            relationship: Relationship::Influences,
            effect: parse_key(effect).unwrap(),
            net_outcome: Outcome::Neutral,
        }
    }

    #[test]
    fn collect_keys_dedupes_and_sorts() {
        let ts = [
            triplet("human:expert>knowledge", "ai>performance"),
            triplet("ai>performance", "ai>performance"),
        ];
        let keys: Vec<String> = collect_keys(&ts).iter().map(EntityKey::canonical).collect();
        assert_eq!(keys, ["ai>performance", "human:expert>knowledge"]);
    }

    #[test]
    fn cosine_helpers() {
        assert!((cosine_distance(&[1.0, 0.0], &[0.0, 2.0]) - 1.0).abs() < 1e-15);
        assert!(cosine_distance(&[1.0, 1.0], &[3.0, 3.0]).abs() < 1e-15);
        assert!((cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]) - 2.0).abs() < 1e-15);
        assert_eq!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]), 1.0);
    }

    #[test]
    fn embedding_set_validation() {
        let k = |s: &str| parse_key(s).unwrap();
        assert!(EmbeddingSet::new(vec![k("ai")], vec![], String::new()).is_err());
        assert!(EmbeddingSet::new(vec![k("ai"), k("co")], vec![vec![1.0], vec![1.0, 2.0]], String::new()).is_err());
        assert!(EmbeddingSet::new(vec![k("ai")], vec![vec![f64::NAN]], String::new()).is_err());
    }

    #[test]
    fn small_types_form_one_cluster() {
        let k = |s: &str| parse_key(s).unwrap();
        let set = EmbeddingSet::new(
            vec![k("ai:llm"), k("human:student"), k("human:teacher")],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.1, 1.0]],
            String::new(),
        )
        .unwrap();
        let (clusters, _) = cluster_by_type(&set, &ClusterConfig::default()).unwrap();
        let ids: Vec<&str> = clusters.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["h0", "a0"]);
        assert_eq!(clusters[0].members.len(), 2);
        assert_eq!(clusters[0].placeholder_name(), "cluster-human-0");
    }
}
