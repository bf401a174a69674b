//! Modularity and Louvain community detection.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, Projection};

/// Smallest modularity improvement that counts as progress.
pub const MIN_GAIN: f64 = 1e-9;

/// Independent shuffles per call; the best partition wins, ties to the first.
pub const RESTARTS: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    /// Community per node, numbered by first appearance in node order.
    pub assignment: Vec<usize>,
    pub num_communities: usize,
    pub modularity: f64,
}

/// `Q = Σ_c (w_c/W − (s_c/2W)²)`; zero for a graph without edges.
pub fn modularity(g: &Projection, assignment: &[usize]) -> Result<f64, AnalysisError> {
    if assignment.len() != g.len() {
        return Err(AnalysisError::UncoveredNodes {
            nodes: g.len(),
            assigned: assignment.len(),
        });
    }
    let w = g.total_weight();
    if w <= 0.0 {
        return Ok(0.0);
    }
    let k = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut internal = vec![0.0; k];
    let mut strength = vec![0.0; k];
    for (u, nb) in g.adj.iter().enumerate() {
        for (&v, &wt) in nb {
            strength[assignment[u]] += wt;
            if u < v && assignment[u] == assignment[v] {
                internal[assignment[u]] += wt;
            }
        }
    }
    Ok((0..k)
        .map(|c| internal[c] / w - (strength[c] / (2.0 * w)).powi(2))
        .sum())
}

/// Renumbers labels by first appearance.
pub fn canonical_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    let out = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (out, map.len())
}

/// Weighted graph with self-loops, as produced by community aggregation.
struct Level {
    adj: Vec<BTreeMap<usize, f64>>,
    self_w: Vec<f64>,
}

impl Level {
    fn strength(&self, i: usize) -> f64 {
        self.adj[i].values().sum::<f64>() + 2.0 * self.self_w[i]
    }
}

/// Local moves starting from `comm` (labels below the node count). Returns
/// the final community of each level node and whether anything moved.
fn local_moves(level: &Level, m: f64, mut comm: Vec<usize>, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = level.adj.len();
    let k: Vec<f64> = (0..n).map(|i| level.strength(i)).collect();
    let mut tot = vec![0.0; n];
    for i in 0..n {
        tot[comm[i]] += k[i];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut moved_any = false;
    loop {
        let mut improvement = 0.0;
        for &i in &order {
            let own = comm[i];
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            for (&j, &w) in &level.adj[i] {
                *links.entry(comm[j]).or_insert(0.0) += w;
            }
            tot[own] -= k[i];
            let gain = |c: usize, links_c: f64, tot: &[f64]| links_c / m - tot[c] * k[i] / (2.0 * m * m);
            let own_gain = gain(own, links.get(&own).copied().unwrap_or(0.0), &tot);
            let (mut best, mut best_gain) = (own, own_gain);
            for (&c, &l) in &links {
                let g = gain(c, l, &tot);
                if g > best_gain + 1e-15 {
                    best = c;
                    best_gain = g;
                }
            }
            if best != own && best_gain - own_gain > MIN_GAIN / 10.0 {
                improvement += best_gain - own_gain;
                comm[i] = best;
                moved_any = true;
            } else {
                best = own;
            }
            tot[best] += k[i];
        }
        if improvement <= MIN_GAIN {
            break;
        }
    }
    (comm, moved_any)
}

fn aggregate(level: &Level, comm: &[usize], count: usize) -> Level {
    let mut adj = vec![BTreeMap::new(); count];
    let mut self_w = vec![0.0; count];
    for (i, nb) in level.adj.iter().enumerate() {
        self_w[comm[i]] += level.self_w[i];
        for (&j, &w) in nb {
            let (a, b) = (comm[i], comm[j]);
            if a == b {
                // Each internal edge is seen from both ends.
                self_w[a] += w / 2.0;
            } else {
                *adj[a].entry(b).or_insert(0.0) += w;
            }
        }
    }
    Level { adj, self_w }
}

/// One multilevel pass. The first level starts from `membership`; every
/// aggregated level starts from singletons. Returns the improved membership
/// and its modularity, or `None` when the pass gains at most [`MIN_GAIN`].
fn multilevel_pass(g: &Projection, membership: &[usize], q: f64, seed: u64, stream: u64) -> Option<(Vec<usize>, f64)> {
    let n = g.len();
    let m = g.total_weight();
    let mut level = Level {
        adj: g.adj.clone(),
        self_w: vec![0.0; n],
    };
    let mut current: Vec<usize> = (0..n).collect();
    let mut best = q;
    let mut start = membership.to_vec();
    for depth in 0u64.. {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream | depth);
        let (comm, moved) = local_moves(&level, m, start, &mut rng);
        if !moved {
            break;
        }
        let (comm, count) = canonical_labels(&comm);
        let candidate: Vec<usize> = current.iter().map(|&c| comm[c]).collect();
        let q_new = modularity(g, &candidate).expect("full assignment");
        if q_new - best <= MIN_GAIN {
            break;
        }
        current = candidate;
        best = q_new;
        level = aggregate(&level, &comm, count);
        start = (0..count).collect();
    }
    (best - q > MIN_GAIN).then_some((current, best))
}

/// Kernighan-Lin style sweep over single-node moves. Every node moves once,
/// each time taking the best move available (to a neighbouring community or
/// to an empty one) even when it lowers modularity; the best intermediate
/// partition is kept. Returns it when it beats `q` by more than [`MIN_GAIN`].
fn kl_sweep(g: &Projection, membership: &[usize], q: f64) -> Option<(Vec<usize>, f64)> {
    let n = g.len();
    let m = g.total_weight();
    let k: Vec<f64> = (0..n).map(|i| g.strength(i)).collect();
    let mut comm = membership.to_vec();
    let mut tot = vec![0.0; n];
    let mut size = vec![0usize; n];
    for i in 0..n {
        tot[comm[i]] += k[i];
        size[comm[i]] += 1;
    }
    let mut moved = vec![false; n];
    let (mut cur, mut best) = (q, q);
    let mut best_comm = comm.clone();
    for _ in 0..n {
        let mut choice: Option<(usize, usize, f64)> = None;
        for i in (0..n).filter(|&i| !moved[i]) {
            let own = comm[i];
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            for (&j, &w) in &g.adj[i] {
                *links.entry(comm[j]).or_insert(0.0) += w;
            }
            let gain = |c: usize, l: f64| {
                let t = if c == own { tot[c] - k[i] } else { tot[c] };
                l / m - t * k[i] / (2.0 * m * m)
            };
            let base = gain(own, links.get(&own).copied().unwrap_or(0.0));
            let mut options: Vec<(usize, f64)> = links.iter().filter(|(&c, _)| c != own).map(|(&c, &l)| (c, gain(c, l))).collect();
            if size[own] > 1 {
                if let Some(empty) = (0..n).find(|&c| size[c] == 0) {
                    options.push((empty, 0.0));
                }
            }
            for (c, g_c) in options {
                let delta = g_c - base;
                if choice.is_none_or(|(_, _, d)| delta > d + 1e-15) {
                    choice = Some((i, c, delta));
                }
            }
        }
        let Some((i, c, delta)) = choice else { break };
        tot[comm[i]] -= k[i];
        size[comm[i]] -= 1;
        comm[i] = c;
        tot[c] += k[i];
        size[c] += 1;
        moved[i] = true;
        cur += delta;
        if cur > best + MIN_GAIN {
            best = cur;
            best_comm.clone_from(&comm);
        }
    }
    if best - q <= MIN_GAIN {
        return None;
    }
    let (labels, _) = canonical_labels(&best_comm);
    let exact = modularity(g, &labels).expect("full assignment");
    (exact - q > MIN_GAIN).then_some((labels, exact))
}

fn optimize(g: &Projection, seed: u64, restart: u64) -> (Vec<usize>, f64) {
    let mut membership: Vec<usize> = (0..g.len()).collect();
    let mut q = modularity(g, &membership).expect("full assignment");
    for pass in 0u64.. {
        let mut improved = false;
        if let Some((next, q_next)) = multilevel_pass(g, &membership, q, seed, (restart << 48) | (pass << 32)) {
            membership = next;
            q = q_next;
            improved = true;
        }
        while let Some((next, q_next)) = kl_sweep(g, &membership, q) {
            membership = next;
            q = q_next;
            improved = true;
        }
        if !improved {
            break;
        }
    }
    (membership, q)
}

/// Louvain: seeded-shuffle local moves per level, then aggregation, until a
/// level no longer raises modularity by more than [`MIN_GAIN`]. Each pass is
/// followed by Kernighan-Lin sweeps, and passes repeat from the node level
/// until neither step gains more than [`MIN_GAIN`]. The whole search runs
/// [`RESTARTS`] times on separate random streams.
pub fn louvain(g: &Projection, seed: u64) -> CommunityPartition {
    let mut membership: Vec<usize> = (0..g.len()).collect();
    if g.total_weight() > 0.0 {
        let mut best = f64::NEG_INFINITY;
        for restart in 0..RESTARTS {
            let (m, q) = optimize(g, seed, restart);
            if q > best + MIN_GAIN {
                best = q;
                membership = m;
            }
        }
    }
    let (assignment, num_communities) = canonical_labels(&membership);
    let modularity = modularity(g, &assignment).expect("full assignment");
    CommunityPartition {
        assignment,
        num_communities,
        modularity,
    }
}
