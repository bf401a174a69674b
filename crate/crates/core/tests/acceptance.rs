//! Runs every primary acceptance criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion.

mod support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use atlas::extraction::RawTriplet;
use atlas::netanalysis::{
    betweenness, betweenness_raw, burt_constraint, effective_size, louvain, score_with, Projection, ScoreFormula,
};
use atlas::notation::{parse_key, EntityKey, EntityType, Feature, Subtype};
use atlas::pipeline::{Workspace, ANALYSIS, GRAPH, MERGED_TRIPLETS};
use atlas::semantics::{dbscan, kmeans, select_k, silhouette_score, KMeansOptions};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use support::oracles::{
    best_modularity, brute_betweenness, brute_dbscan, karate_club, random_graph, random_vectors, rng, HOLE_TABLE,
};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_name(r: &mut ChaCha8Rng) -> String {
    const ALPHA: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    let words = r.random_range(1..=3);
    (0..words)
        .map(|_| {
            let len = r.random_range(1..=7);
            (0..len).map(|_| ALPHA[r.random_range(0..ALPHA.len())] as char).collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("_")
}

fn random_key(r: &mut ChaCha8Rng) -> EntityKey {
    let spec = |r: &mut ChaCha8Rng| r.random_bool(0.3).then(|| random_name(r));
    EntityKey {
        entity_type: EntityType::ALL[r.random_range(0..3)],
        subtype: r.random_bool(0.7).then(|| Subtype {
            name: random_name(r),
            specificity: spec(r),
        }),
        feature: r.random_bool(0.7).then(|| Feature {
            name: random_name(r),
            specificity: spec(r),
            is_perception: r.random_bool(0.3),
        }),
    }
}

fn notation_round_trip() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut failures = 0;
    for _ in 0..1000 {
        let k = random_key(&mut r);
        if parse_key(&k.canonical()).ok().as_ref() != Some(&k) {
            failures += 1;
        }
    }
    let text = std::fs::read_to_string(support::fixture_dir().join("coding_examples.txt")).unwrap();
    let examples: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let bad: Vec<&str> = examples.iter().copied().filter(|e| parse_key(e).is_err()).collect();
    let secs = start.elapsed().as_secs_f64();
    check(
        failures == 0 && bad.is_empty() && secs < 1.0,
        format!(
            "1000 generated keys, {failures} round-trip failures; {}/{} scheme examples parse; {secs:.3} s",
            examples.len() - bad.len(),
            examples.len()
        ),
    )
}

fn dbscan_oracle() -> Outcome {
    let mut r = rng(2024);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = r.random_range(1..=200);
        let d = r.random_range(2..=16);
        let eps = r.random_range(0.01..0.5);
        let min_pts = r.random_range(2..=6);
        let v = random_vectors(&mut r, n, d);
        if dbscan(&v, eps, min_pts).unwrap().labels != brute_dbscan(&v, eps, min_pts) {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("100 random sets (n <= 200, d <= 16), {mismatches} mismatches"))
}

fn clustering() -> Outcome {
    let opts = KMeansOptions::default();
    let mut hits = 0;
    let mut increases = 0;
    for seed in 0..100u64 {
        let mut r = rng(seed);
        let v: Vec<Vec<f64>> = (0..2)
            .flat_map(|axis| {
                (0..20)
                    .map(|_| (0..8).map(|j| if j == axis { 1.0 } else { 0.0 } + r.random_range(-0.05..0.05)).collect())
                    .collect::<Vec<Vec<f64>>>()
            })
            .collect();
        let sel = select_k(&v, 2, 8, seed, opts).unwrap();
        let run = kmeans(&v, sel.k, seed, opts).unwrap();
        if sel.k == 2 && silhouette_score(&v, &run.assignment) > 0.9 {
            hits += 1;
        }
        let noisy = random_vectors(&mut r, 60, 6);
        for k in [2, 3, 5] {
            let h = kmeans(&noisy, k, seed, opts).unwrap().history;
            increases += h.windows(2).filter(|w| w[1] > w[0] + 1e-9 * w[0].max(1.0)).count();
        }
    }
    check(
        hits >= 95 && increases == 0,
        format!("two-blob k = 2 with silhouette > 0.9 on {hits}/100 seeds; {increases} objective increases"),
    )
}

fn burt() -> Outcome {
    let tri = Projection::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
    let star = Projection::from_edges(6, &(1..=5).map(|l| (0, l, 1.0)).collect::<Vec<_>>());
    let k4 = Projection::from_edges(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]);
    let cases = [
        ("triangle constraint", burt_constraint(&tri, 0), 1.125),
        ("triangle effective size", effective_size(&tri, 0), 1.0),
        ("star center constraint", burt_constraint(&star, 0), 0.2),
        ("star center effective size", effective_size(&star, 0), 5.0),
        ("star leaf constraint", burt_constraint(&star, 1), 1.0),
        ("star leaf effective size", effective_size(&star, 1), 1.0),
        ("4-clique effective size", effective_size(&k4, 0), 1.0),
    ];
    let worst = cases
        .iter()
        .map(|(_, got, want)| got.map_or(f64::INFINITY, |g| (g - want).abs()))
        .fold(0.0, f64::max);
    check(worst <= 1e-9, format!("{} closed forms, max error {worst:.1e}", cases.len()))
}

fn betweenness_criterion() -> Outcome {
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(1..=8);
        let p = r.random_range(0.15..0.8);
        let weighted = r.random_bool(0.5);
        let edges = random_graph(&mut r, n, p, weighted);
        let got = betweenness(&Projection::from_edges(n, &edges));
        for (a, b) in got.iter().zip(brute_betweenness(n, &edges)) {
            worst = worst.max((a - b).abs());
        }
    }
    let mut closed: f64 = 0.0;
    for n in 3..=10usize {
        let path: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
        for (k, b) in betweenness_raw(&Projection::from_edges(n, &path)).iter().enumerate() {
            closed = closed.max((b - (k * (n - 1 - k)) as f64).abs());
        }
        let star: Vec<_> = (1..n).map(|l| (0, l, 1.0)).collect();
        closed = closed.max((betweenness(&Projection::from_edges(n, &star))[0] - 1.0).abs());
    }
    check(
        worst <= 1e-9 && closed == 0.0,
        format!("100 random graphs max error {worst:.1e}; path/star closed-form error {closed:.1e}"),
    )
}

fn louvain_criterion() -> Outcome {
    let start = Instant::now();
    let twin = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)];
    let q_twin = louvain(&Projection::from_edges(6, &twin), 0).modularity;
    let mut r = rng(8);
    let mut gap: f64 = 0.0;
    for case in 0..100 {
        let (p, weighted) = (r.random_range(0.2..0.7), r.random_bool(0.5));
        let edges = random_graph(&mut r, 8, p, weighted);
        let q = louvain(&Projection::from_edges(8, &edges), case).modularity;
        gap = gap.max(best_modularity(8, &edges) - q);
    }
    let q_karate = louvain(&Projection::from_edges(34, &karate_club()), 0).modularity;
    let secs = start.elapsed().as_secs_f64();
    check(
        q_twin == 0.5 && gap <= 0.02 && q_karate >= 0.40 && secs < 10.0,
        format!("twin triangles Q = {q_twin}; worst gap to exhaustive best {gap:.4}; karate Q = {q_karate:.4}; {secs:.2} s"),
    )
}

fn published_table() -> Outcome {
    let mut rows: Vec<(f64, &str)> = HOLE_TABLE
        .iter()
        .map(|r| (score_with(ScoreFormula::Composite, r.effective_size, r.betweenness, r.constraint).unwrap(), r.node))
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let matched = rows.iter().zip(HOLE_TABLE.iter()).take(5).filter(|(a, b)| a.1 == b.node).count();
    let worst_rel = HOLE_TABLE
        .iter()
        .map(|r| {
            let s = score_with(ScoreFormula::SizeOverConstraint, r.effective_size, r.betweenness, r.constraint).unwrap();
            (s - r.score).abs() / r.score
        })
        .fold(0.0, f64::max);
    check(
        matched == 5,
        format!("top-5 order {matched}/5; published magnitudes under size-over-constraint within {worst_rel:.1e} relative"),
    )
}

fn pipeline_replay() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let start = Instant::now();
    support::run_fixture(a.path());
    let secs = start.elapsed().as_secs_f64();
    support::run_fixture(b.path());
    let identical = [GRAPH, ANALYSIS]
        .iter()
        .all(|f| std::fs::read(a.path().join(f)).unwrap() == std::fs::read(b.path().join(f)).unwrap());
    let golden = support::export_digests(a.path()) == support::golden_digests();
    check(
        identical && golden && secs < 30.0,
        format!("two runs identical: {identical}; golden digests match: {golden}; {secs:.2} s per run"),
    )
}

fn conservation() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    support::run_fixture(dir.path());
    let ws = Workspace::new(dir.path());
    let graph = ws.read_graph().unwrap();
    let triplets: Vec<RawTriplet> = ws.read_jsonl(MERGED_TRIPLETS).unwrap();
    let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
    for e in &graph.edges {
        for f in &e.findings {
            *seen.entry((f.paper_id.clone(), f.text.clone())).or_default() += 1;
        }
    }
    let once = triplets
        .iter()
        .filter(|t| seen.get(&(t.paper_id.clone(), t.finding.clone())) == Some(&1))
        .count();
    check(
        graph.total_weight() == triplets.len() && once == triplets.len(),
        format!(
            "sum of weights {} vs {} triplets; {once}/{} pairs on exactly one edge",
            graph.total_weight(),
            triplets.len(),
            triplets.len()
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("notation round-trip", notation_round_trip),
        ("dbscan oracle", dbscan_oracle),
        ("clustering", clustering),
        ("burt metrics", burt),
        ("betweenness", betweenness_criterion),
        ("louvain / modularity", louvain_criterion),
        ("published structural-hole top-5", published_table),
        ("pipeline replay", pipeline_replay),
        ("graph conservation", conservation),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                println!("FAIL  {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
