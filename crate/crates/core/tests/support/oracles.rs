//! Brute-force reference implementations and reference data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    ab / (aa.sqrt() * bb.sqrt())
}

/// Density-reachability by fixpoint over the full neighbour matrix.
/// Clusters are numbered by their smallest core point; a border point takes
/// the smallest cluster among its core neighbours.
pub fn brute_dbscan(vectors: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = vectors.len();
    let near: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| 1.0 - cosine(&vectors[i], &vectors[j]) <= eps).collect())
        .collect();
    let core: Vec<bool> = (0..n).map(|i| near[i].iter().filter(|&&b| b).count() >= min_pts).collect();

    // Each core point starts in its own component; repeat until stable.
    let mut comp: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for i in (0..n).filter(|&i| core[i]) {
            for j in (0..n).filter(|&j| core[j] && near[i][j]) {
                let m = comp[i].min(comp[j]);
                if comp[i] != m || comp[j] != m {
                    comp[i] = m;
                    comp[j] = m;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut roots: Vec<usize> = (0..n).filter(|&i| core[i]).map(|i| comp[i]).collect();
    roots.sort_unstable();
    roots.dedup();
    let label_of = |root: usize| roots.iter().position(|&r| r == root).expect("root");

    (0..n)
        .map(|i| {
            if core[i] {
                Some(label_of(comp[i]))
            } else {
                (0..n)
                    .filter(|&j| core[j] && near[i][j])
                    .map(|j| label_of(comp[j]))
                    .min()
            }
        })
        .collect()
}

/// Points around a few random directions, plus uniform noise.
pub fn random_vectors(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    let centers: Vec<Vec<f64>> = (0..rng.random_range(1..=4))
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    (0..n)
        .map(|_| {
            if rng.random_bool(0.2) {
                (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
            } else {
                let c = &centers[rng.random_range(0..centers.len())];
                let spread = rng.random_range(0.01..0.3);
                c.iter().map(|x| x + rng.random_range(-spread..spread)).collect()
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph with unit or random integer weights.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, weighted: bool) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                let w = if weighted { rng.random_range(1..=4) as f64 } else { 1.0 };
                edges.push((u, v, w));
            }
        }
    }
    edges
}

fn adjacency(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<bool>> {
    let mut a = vec![vec![false; n]; n];
    for &(u, v, _) in edges {
        a[u][v] = true;
        a[v][u] = true;
    }
    a
}

fn all_simple_paths(a: &[Vec<bool>], s: usize, t: usize) -> Vec<Vec<usize>> {
    fn walk(a: &[Vec<bool>], t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().expect("non-empty path");
        if v == t {
            out.push(path.clone());
            return;
        }
        for w in 0..a.len() {
            if a[v][w] && !path.contains(&w) {
                path.push(w);
                walk(a, t, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(a, t, &mut vec![s], &mut out);
    out
}

/// Normalized betweenness from every simple path between every pair: the
/// shortest ones are kept and interior visits counted.
pub fn brute_betweenness(n: usize, edges: &[(usize, usize, f64)]) -> Vec<f64> {
    let a = adjacency(n, edges);
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let paths = all_simple_paths(&a, s, t);
            let Some(shortest) = paths.iter().map(Vec::len).min() else {
                continue;
            };
            let best: Vec<&Vec<usize>> = paths.iter().filter(|p| p.len() == shortest).collect();
            for v in 0..n {
                let through = best.iter().filter(|p| p[1..p.len() - 1].contains(&v)).count();
                b[v] += through as f64 / best.len() as f64;
            }
        }
    }
    if n < 3 {
        return vec![0.0; n];
    }
    let pairs = ((n - 1) * (n - 2)) as f64 / 2.0;
    b.iter().map(|x| x / pairs).collect()
}

/// Newman's pairwise form `(1/2m) Σ_ij (A_ij − k_i k_j / 2m) δ(c_i, c_j)`.
pub fn pairwise_modularity(n: usize, edges: &[(usize, usize, f64)], labels: &[usize]) -> f64 {
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v, w) in edges {
        a[u][v] += w;
        a[v][u] += w;
    }
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let max = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for c in 0..=max {
            prefix.push(c);
            grow(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, &mut out);
    out
}

/// Highest modularity over all partitions.
pub fn best_modularity(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
    set_partitions(n)
        .iter()
        .map(|p| pairwise_modularity(n, edges, p))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Zachary's karate club, 34 members and 78 ties.
pub fn karate_club() -> Vec<(usize, usize, f64)> {
    let adj: [(usize, &[usize]); 26] = [
        (0, &[1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 17, 19, 21, 31]),
        (1, &[2, 3, 7, 13, 17, 19, 21, 30]),
        (2, &[3, 7, 8, 9, 13, 27, 28, 32]),
        (3, &[7, 12, 13]),
        (4, &[6, 10]),
        (5, &[6, 10, 16]),
        (6, &[16]),
        (8, &[30, 32, 33]),
        (9, &[33]),
        (13, &[33]),
        (14, &[32, 33]),
        (15, &[32, 33]),
        (18, &[32, 33]),
        (19, &[33]),
        (20, &[32, 33]),
        (22, &[32, 33]),
        (23, &[25, 27, 29, 32, 33]),
        (24, &[25, 27, 31]),
        (25, &[31]),
        (26, &[29, 33]),
        (27, &[33]),
        (28, &[31, 33]),
        (29, &[32, 33]),
        (30, &[32, 33]),
        (31, &[32, 33]),
        (32, &[33]),
    ];
    adj.iter()
        .flat_map(|(u, vs)| vs.iter().map(move |&v| (*u, v, 1.0)))
        .collect()
}

/// A published structural-hole table row.
#[derive(Debug, Clone, Copy)]
pub struct HoleRow {
    pub node: &'static str,
    pub constraint: f64,
    pub betweenness: f64,
    pub effective_size: f64,
    pub score: f64,
}

const fn row(node: &'static str, constraint: f64, betweenness: f64, effective_size: f64, score: f64) -> HoleRow {
    HoleRow {
        node,
        constraint,
        betweenness,
        effective_size,
        score,
    }
}

/// Top twenty structural-hole nodes of the full-corpus atlas, score order.
pub const HOLE_TABLE: [HoleRow; 20] = [
    row("ai:llm", 0.010984, 0.150596, 94.312500, 85.864820),
    row("ai:generative", 0.015250, 0.133489, 65.784615, 43.137859),
    row("human>trust", 0.018284, 0.116269, 55.821429, 30.529403),
    row("ai:chatbot", 0.020830, 0.070510, 48.500000, 23.283300),
    row("ai:agent", 0.022660, 0.064660, 46.750000, 20.630656),
    row("human:student", 0.023812, 0.069600, 44.652174, 18.751957),
    row("co:interaction", 0.024366, 0.057347, 41.512195, 17.036841),
    row("co:collaboration", 0.025166, 0.046421, 40.350000, 16.033560),
    row("ai:explanation", 0.026415, 0.058686, 38.421053, 14.545294),
    row("human:designer", 0.028309, 0.051565, 37.794872, 13.350656),
    row("ai:assistant", 0.028666, 0.040824, 34.941176, 12.189042),
    row("human:participant", 0.032931, 0.049094, 32.764706, 9.949519),
    row("ai:chatgpt", 0.045839, 0.021821, 21.904762, 4.778657),
    row("human>understanding", 0.047619, 0.021388, 21.000000, 4.410000),
    row("ai>assistance", 0.048503, 0.025489, 20.800000, 4.288355),
    row("ai:conversational", 0.055316, 0.023947, 20.000000, 3.615620),
    row("human>reliance", 0.057713, 0.020765, 18.526316, 3.210105),
    row("human:clinician", 0.056984, 0.020688, 17.764706, 3.117465),
    row("human:expert", 0.061790, 0.018544, 18.300000, 2.961640),
    row("human:developer", 0.062500, 0.017764, 16.000000, 2.560000),
];

fn dense(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v, w) in edges {
        if u != v {
            a[u][v] += w;
            a[v][u] += w;
        }
    }
    a
}

/// Burt constraint from the dense proportional-tie matrix.
pub fn dense_constraint(n: usize, edges: &[(usize, usize, f64)], i: usize) -> Option<f64> {
    let a = dense(n, edges);
    let p: Vec<Vec<f64>> = a
        .iter()
        .map(|row| {
            let s: f64 = row.iter().sum();
            row.iter().map(|w| if s > 0.0 { w / s } else { 0.0 }).collect()
        })
        .collect();
    if a[i].iter().all(|&w| w == 0.0) {
        return None;
    }
    let mut c = 0.0;
    for j in (0..n).filter(|&j| j != i && a[i][j] > 0.0) {
        let indirect: f64 = (0..n).filter(|&q| q != i && q != j).map(|q| p[i][q] * p[q][j]).sum();
        c += (p[i][j] + indirect).powi(2);
    }
    Some(c)
}

/// Burt effective size from the dense matrix, with marginal strength
/// `m_jq = w_jq / max_k w_jk`.
pub fn dense_effective_size(n: usize, edges: &[(usize, usize, f64)], i: usize) -> Option<f64> {
    let a = dense(n, edges);
    let s_i: f64 = a[i].iter().sum();
    if s_i == 0.0 {
        return None;
    }
    let mut total = 0.0;
    for j in (0..n).filter(|&j| a[i][j] > 0.0) {
        let max_j = a[j].iter().copied().fold(0.0, f64::max);
        let redundancy: f64 = (0..n)
            .filter(|&q| q != i && q != j)
            .map(|q| a[i][q] / s_i * a[j][q] / max_j)
            .sum();
        total += 1.0 - redundancy;
    }
    Some(total)
}
