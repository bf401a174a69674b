mod support;

use atlas::notation::parse_key;
use atlas::semantics::{
    build_merge_map, canonical_representative, kmeans, normalize, select_k, silhouette_score, EmbeddingSet,
    KMeansOptions,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use support::oracles::rng;

/// Two tight blobs around orthogonal directions.
fn two_blobs(r: &mut ChaCha8Rng, per_blob: usize, d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for axis in 0..2 {
        for _ in 0..per_blob {
            let v: Vec<f64> = (0..d)
                .map(|j| if j == axis { 1.0 } else { 0.0 } + r.random_range(-0.05..0.05))
                .collect();
            out.push(v);
        }
    }
    out
}

#[test]
fn two_blobs_select_two() {
    let opts = KMeansOptions::default();
    let mut hits = 0;
    for seed in 0..100u64 {
        let v = two_blobs(&mut rng(seed), 20, 8);
        let sel = select_k(&v, 2, 8, seed, opts).unwrap();
        let r = kmeans(&v, sel.k, seed, opts).unwrap();
        if sel.k == 2 && silhouette_score(&v, &r.assignment) > 0.9 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn kmeans_is_deterministic_per_seed() {
    let v = two_blobs(&mut rng(3), 15, 6);
    let opts = KMeansOptions::default();
    assert_eq!(kmeans(&v, 3, 11, opts).unwrap(), kmeans(&v, 3, 11, opts).unwrap());
}

#[test]
fn merge_map_on_planted_synonyms() {
    let keys: Vec<_> = ["ai:gpt4", "ai:gpt_4", "ai:robot", "human:student", "human:pupil"]
        .iter()
        .map(|k| parse_key(k).unwrap())
        .collect();
    let vectors = vec![
        vec![1.0, 0.0, 0.0],
        vec![0.99, 0.05, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 0.02, 0.98],
    ];
    let set = EmbeddingSet::new(keys, vectors, "test".into()).unwrap();
    let map = build_merge_map(&set, 0.2, 2).unwrap();
    assert_eq!(map.clusters.len(), 2);
    assert!(map.is_flat());
    let ai = &map.clusters[0];
    assert_eq!(ai.members.len(), 2);
    assert!(map.entries.values().all(|c| map.resolve(c) == c));
}

fn vectors(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_never_increases(v in vectors(30, 4), k in 2usize..6, seed in any::<u64>()) {
        let r = kmeans(&v, k, seed, KMeansOptions::default()).unwrap();
        for w in r.history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0), "{:?}", r.history);
        }
        prop_assert!((r.history.last().copied().unwrap_or(r.objective) - r.objective).abs() <= 1e-9 * r.objective.max(1.0));
    }

    #[test]
    fn representative_ignores_vector_scale(v in vectors(6, 5), scales in prop::collection::vec(0.1f64..10.0, 6)) {
        prop_assume!(v.iter().all(|x| x.iter().map(|a| a * a).sum::<f64>() > 1e-3));
        let keys: Vec<_> = (0..6).map(|i| parse_key(&format!("ai:k{i}")).unwrap()).collect();
        let unit: Vec<Vec<f64>> = v.iter().map(|x| normalize(x)).collect();
        let scaled: Vec<Vec<f64>> = unit.iter().zip(&scales).map(|(x, s)| x.iter().map(|a| a * s).collect()).collect();
        let a = canonical_representative(&keys, &unit);
        let rescaled = EmbeddingSet::new(keys.clone(), scaled, "t".into()).unwrap().normalized();
        let b = canonical_representative(&keys, &rescaled.vectors);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn merge_map_is_flat(v in vectors(24, 3), eps in 0.01f64..0.6) {
        let keys: Vec<_> = (0..24)
            .map(|i| parse_key(&format!("{}:k{i}", ["human", "ai", "co"][i % 3])).unwrap())
            .collect();
        prop_assume!(v.iter().all(|x| x.iter().map(|a| a * a).sum::<f64>() > 1e-3));
        let set = EmbeddingSet::new(keys, v, "t".into()).unwrap();
        let map = build_merge_map(&set, eps, 2).unwrap();
        prop_assert!(map.is_flat());
        for c in &map.clusters {
            prop_assert!(c.members.iter().all(|m| m.entity_type == c.canonical.entity_type));
            prop_assert!(c.members.contains(&c.canonical));
        }
    }
}
