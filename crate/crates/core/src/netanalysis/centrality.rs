//! Shortest-path betweenness (Brandes) on unweighted paths.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::Projection;

/// Per-source dependency accumulation. Summed over all sources this counts
/// every unordered pair twice.
fn dependencies(g: &Projection, s: usize) -> Vec<f64> {
    let n = g.len();
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    sigma[s] = 1.0;
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        stack.push(v);
        for &w in g.adj[v].keys() {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
            if dist[w] == dist[v] + 1 {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }
    let mut delta = vec![0.0f64; n];
    while let Some(w) = stack.pop() {
        for &v in &preds[w] {
            delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
        }
    }
    delta[s] = 0.0;
    delta
}

/// Raw betweenness: for each node, the sum over unordered pairs `{s, t}` not
/// containing it of the fraction of shortest paths passing through it.
pub fn betweenness_raw(g: &Projection) -> Vec<f64> {
    let n = g.len();
    let per_source: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dependencies(g, s)).collect();
    let mut total = vec![0.0; n];
    for d in per_source {
        for (t, x) in total.iter_mut().zip(d) {
            *t += x;
        }
    }
    total.iter().map(|x| x / 2.0).collect()
}

/// Betweenness normalized by the `(n−1)(n−2)/2` pairs that exclude a node.
pub fn betweenness(g: &Projection) -> Vec<f64> {
    let n = g.len();
    let raw = betweenness_raw(g);
    if n < 3 {
        return vec![0.0; n];
    }
    let pairs = ((n - 1) * (n - 2)) as f64 / 2.0;
    raw.into_iter().map(|x| x / pairs).collect()
}
