//! Lloyd's k-means with seeded k-means++ restarts, silhouette scoring under
//! cosine distance, and silhouette-based choice of k.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{cosine_distance, squared_euclidean, SemanticsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster per point. Clusters are numbered by first appearance in input
    /// order.
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared Euclidean distances to the assigned centroid.
    pub objective: f64,
    /// Objective after every assignment step of the winning restart.
    pub history: Vec<f64>,
}

fn mean_of(vectors: &[Vec<f64>], members: impl Iterator<Item = usize>) -> Option<Vec<f64>> {
    let mut sum: Option<Vec<f64>> = None;
    let mut count = 0usize;
    for i in members {
        let s = sum.get_or_insert_with(|| vec![0.0; vectors[i].len()]);
        for (a, b) in s.iter_mut().zip(&vectors[i]) {
            *a += b;
        }
        count += 1;
    }
    sum.map(|mut s| {
        for a in &mut s {
            *a /= count as f64;
        }
        s
    })
}

/// Arithmetic mean of the given rows.
pub fn centroid(vectors: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    mean_of(vectors, members.iter().copied()).unwrap_or_default()
}

fn nearest(centroids: &[Vec<f64>], v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = squared_euclidean(cen, v);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_centroids(vectors: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = vectors.iter().map(|v| squared_euclidean(v, &vectors[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if *d <= 0.0 {
                    continue;
                }
                if target < *d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            if chosen.contains(&pick) {
                (0..n).find(|i| !chosen.contains(i)).unwrap_or(pick)
            } else {
                pick
            }
        } else {
            // All remaining points coincide with a chosen centre.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, v) in vectors.iter().enumerate() {
            d2[i] = d2[i].min(squared_euclidean(v, &vectors[next]));
        }
    }
    chosen.into_iter().map(|i| vectors[i].clone()).collect()
}

fn lloyd(vectors: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iter: usize) -> KMeansResult {
    let k = centroids.len();
    let mut assignment: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    for _ in 0..max_iter.max(1) {
        let mut objective = 0.0;
        let next: Vec<usize> = vectors
            .iter()
            .map(|v| {
                let (c, d) = nearest(&centroids, v);
                objective += d;
                c
            })
            .collect();
        history.push(objective);
        if next == assignment {
            break;
        }
        assignment = next;
        for (c, cen) in centroids.iter_mut().enumerate() {
            // An emptied cluster keeps its previous centre.
            if let Some(m) = mean_of(vectors, (0..vectors.len()).filter(|&i| assignment[i] == c)) {
                *cen = m;
            }
        }
        debug_assert_eq!(centroids.len(), k);
    }
    let objective = vectors
        .iter()
        .zip(&assignment)
        .map(|(v, &c)| squared_euclidean(v, &centroids[c]))
        .sum();
    KMeansResult {
        assignment,
        centroids,
        objective,
        history,
    }
}

fn relabel(mut r: KMeansResult) -> KMeansResult {
    let k = r.centroids.len();
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for &c in &r.assignment {
        if map[c] == usize::MAX {
            map[c] = next;
            next += 1;
        }
    }
    for slot in map.iter_mut().filter(|m| **m == usize::MAX) {
        *slot = next;
        next += 1;
    }
    let mut centroids = vec![Vec::new(); k];
    for (old, cen) in r.centroids.into_iter().enumerate() {
        centroids[map[old]] = cen;
    }
    r.centroids = centroids;
    for c in &mut r.assignment {
        *c = map[*c];
    }
    r
}

pub fn kmeans(vectors: &[Vec<f64>], k: usize, seed: u64, opts: KMeansOptions) -> Result<KMeansResult, SemanticsError> {
    super::check_dims(vectors)?;
    let n = vectors.len();
    if k == 0 || k > n {
        return Err(SemanticsError::InvalidK { k, n });
    }
    let runs: Vec<KMeansResult> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(restart as u64);
            let init = seed_centroids(vectors, k, &mut rng);
            lloyd(vectors, init, opts.max_iter)
        })
        .collect();
    // Lowest objective wins; earliest restart on ties.
    let best = runs
        .into_iter()
        .reduce(|best, r| if r.objective < best.objective { r } else { best })
        .expect("at least one restart");
    Ok(relabel(best))
}

/// Pairwise cosine distances, computed once per silhouette evaluation.
pub fn distance_matrix(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    vectors
        .par_iter()
        .map(|a| vectors.iter().map(|b| cosine_distance(a, b)).collect())
        .collect()
}

/// Per-point silhouette under a precomputed distance matrix. Points in
/// singleton clusters score 0.
pub fn silhouette_samples(dist: &[Vec<f64>], labels: &[usize]) -> Vec<f64> {
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    (0..labels.len())
        .map(|i| {
            let own = labels[i];
            if sizes[own] <= 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, &l) in labels.iter().enumerate() {
                if j != i {
                    sums[l] += dist[i][j];
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            if !b.is_finite() {
                return 0.0;
            }
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect()
}

pub fn silhouette_score(vectors: &[Vec<f64>], labels: &[usize]) -> f64 {
    let dist = distance_matrix(vectors);
    let s = silhouette_samples(&dist, labels);
    if s.is_empty() {
        0.0
    } else {
        s.iter().sum::<f64>() / s.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub k: usize,
    /// `(k, mean silhouette)` for every candidate evaluated.
    pub scores: Vec<(usize, f64)>,
}

/// Picks the k in `k_min..=k_max` (clamped to `2..=n-1`) with the highest
/// mean silhouette; ties go to the smaller k.
pub fn select_k(
    vectors: &[Vec<f64>],
    k_min: usize,
    k_max: usize,
    seed: u64,
    opts: KMeansOptions,
) -> Result<KSelection, SemanticsError> {
    let n = vectors.len();
    if n < 3 {
        return Err(SemanticsError::TooFewVectors { needed: 3, got: n });
    }
    let lo = k_min.max(2);
    let hi = k_max.min(n - 1);
    if lo > hi {
        return Err(SemanticsError::InvalidParameter(format!(
            "k range [{k_min}, {k_max}] has no admissible value for n = {n}"
        )));
    }
    let dist = distance_matrix(vectors);
    let mut scores = Vec::new();
    for k in lo..=hi {
        let r = kmeans(vectors, k, seed, opts)?;
        let s = silhouette_samples(&dist, &r.assignment);
        scores.push((k, s.iter().sum::<f64>() / n as f64));
    }
    let mut best = scores[0];
    for &(k, s) in &scores[1..] {
        if s > best.1 {
            best = (k, s);
        }
    }
    Ok(KSelection { k: best.0, scores })
}

/// Members ordered by Euclidean distance to their centroid (ties keep the
/// given order), truncated to `n`.
pub fn nearest_to_centroid(vectors: &[Vec<f64>], members: &[usize], n: usize) -> Vec<usize> {
    let c = centroid(vectors, members);
    let mut ranked: Vec<(f64, usize)> = members
        .iter()
        .map(|&i| (squared_euclidean(&vectors[i], &c), i))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    ranked.into_iter().take(n).map(|(_, i)| i).collect()
}
