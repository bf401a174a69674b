//! Synonym merging: DBSCAN per entity type, one canonical key per cluster.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{cosine_similarity, dbscan, EmbeddingSet, SemanticsError};
use crate::extraction::RawTriplet;
use crate::notation::{EntityKey, EntityType};

/// Cosine similarities closer than this count as a tie.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeCluster {
    pub canonical: EntityKey,
    /// All members in canonical order, the canonical key included.
    pub members: Vec<EntityKey>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeMap {
    /// Member → canonical for every key in a cluster. Keys not listed map to
    /// themselves.
    pub entries: BTreeMap<EntityKey, EntityKey>,
    pub clusters: Vec<MergeCluster>,
}

impl MergeMap {
    pub fn from_clusters(mut clusters: Vec<MergeCluster>) -> Self {
        clusters.sort_by(|a, b| a.canonical.cmp(&b.canonical));
        let entries = clusters
            .iter()
            .flat_map(|c| c.members.iter().map(|m| (m.clone(), c.canonical.clone())))
            .collect();
        Self { entries, clusters }
    }

    pub fn resolve<'a>(&'a self, key: &'a EntityKey) -> &'a EntityKey {
        self.entries.get(key).unwrap_or(key)
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// True when no canonical key is itself remapped and each member belongs
    /// to one cluster.
    pub fn is_flat(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.clusters.iter().all(|c| {
            c.members.contains(&c.canonical)
                && self.entries.get(&c.canonical) == Some(&c.canonical)
                && c.members.iter().all(|m| seen.insert(m.clone()))
        })
    }
}

/// The member whose vector is most cosine-similar to the mean vector; ties
/// go to the smallest canonical string.
pub fn canonical_representative(keys: &[EntityKey], vectors: &[Vec<f64>]) -> EntityKey {
    assert!(!keys.is_empty() && keys.len() == vectors.len(), "non-empty cluster with one vector per key");
    let dim = vectors[0].len();
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= vectors.len() as f64;
    }
    let mut best: Option<(f64, &EntityKey)> = None;
    for (k, v) in keys.iter().zip(vectors) {
        let s = cosine_similarity(v, &mean);
        best = match best {
            None => Some((s, k)),
            Some((bs, bk)) => {
                if s > bs + TIE_TOLERANCE || ((s - bs).abs() <= TIE_TOLERANCE && k < bk) {
                    Some((s, k))
                } else {
                    Some((bs, bk))
                }
            }
        };
    }
    best.expect("non-empty").1.clone()
}

/// Runs DBSCAN within each entity type (keys in canonical order) and builds
/// the member → canonical map. Noise keys are left unmapped.
pub fn build_merge_map(set: &EmbeddingSet, eps: f64, min_pts: usize) -> Result<MergeMap, SemanticsError> {
    dbscan::check_params(eps, min_pts)?;
    let unit = set.normalized();
    let mut clusters = Vec::new();
    for ty in EntityType::ALL {
        let mut keys: Vec<EntityKey> = unit.keys.iter().filter(|k| k.entity_type == ty).cloned().collect();
        keys.sort();
        let sub = unit.subset(&keys)?;
        let labels = dbscan::dbscan(&sub.vectors, eps, min_pts)?;
        for members in labels.members() {
            let keys: Vec<EntityKey> = members.iter().map(|&i| sub.keys[i].clone()).collect();
            let vectors: Vec<Vec<f64>> = members.iter().map(|&i| sub.vectors[i].clone()).collect();
            let canonical = canonical_representative(&keys, &vectors);
            clusters.push(MergeCluster { canonical, members: keys });
        }
    }
    Ok(MergeMap::from_clusters(clusters))
}

/// Replaces every cause and effect by its canonical key. Triplets that become
/// identical stay separate.
pub fn apply_merge(triplets: &[RawTriplet], merge: &MergeMap) -> Vec<RawTriplet> {
    triplets
        .iter()
        .map(|t| RawTriplet {
            cause: merge.resolve(&t.cause).clone(),
            effect: merge.resolve(&t.effect).clone(),
            ..t.clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::{parse_key, Outcome, Relationship};

    fn k(s: &str) -> EntityKey {
        parse_key(s).unwrap()
    }

    #[test]
    fn singleton_is_its_own_representative() {
        assert_eq!(canonical_representative(&[k("ai:llm")], &[vec![0.3, 0.1]]), k("ai:llm"));
    }

    #[test]
    fn representative_nearest_the_mean() {
        // gpt_4 sits between the other two, so it is closest to their mean.
        let keys = [k("ai:gpt4"), k("ai:gpt_4o"), k("ai:gpt_4")];
        let vectors = [vec![1.0, 0.0], vec![0.8, 0.6], vec![0.95, 0.31]];
        assert_eq!(canonical_representative(&keys, &vectors), k("ai:gpt_4"));
    }

    #[test]
    fn exact_tie_prefers_smaller_key() {
        let keys = [k("ai:b"), k("ai:a")];
        let vectors = [vec![1.0, 0.2], vec![0.2, 1.0]];
        assert_eq!(canonical_representative(&keys, &vectors), k("ai:a"));
    }

    #[test]
    fn merges_within_type_only() {
        let set = EmbeddingSet::new(
            vec![k("ai:interpretable"), k("ai:interpretability"), k("human:interpretability"), k("ai:robot")],
            vec![vec![1.0, 0.05], vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            String::new(),
        )
        .unwrap();
        let m = build_merge_map(&set, 0.2, 2).unwrap();
        assert_eq!(m.clusters.len(), 1);
        assert!(m.is_flat());
        assert_eq!(m.resolve(&k("ai:interpretable")), &k("ai:interpretability"));
        assert_eq!(m.resolve(&k("human:interpretability")), &k("human:interpretability"));
    }

    #[test]
    fn apply_merge_keeps_every_triplet() {
        let t = |c: &str| RawTriplet {
            finding_id: c.into(),
            paper_id: "p".into(),
            finding: c.into(),
            cause: k(c),
            relationship: Relationship::Increases,
            effect: k("human>trust"),
            net_outcome: Outcome::Positive,
        };
        let ts = vec![t("ai:interpretable"), t("ai:interpretability")];
        assert_eq!(apply_merge(&ts, &MergeMap::default()), ts);
        let m = MergeMap::from_clusters(vec![MergeCluster {
            canonical: k("ai:interpretability"),
            members: vec![k("ai:interpretability"), k("ai:interpretable")],
        }]);
        let out = apply_merge(&ts, &m);
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|x| x.cause == k("ai:interpretability")));
        assert_eq!(apply_merge(&out, &m), out);
    }
}
