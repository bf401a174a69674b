//! Undirected weighted projection used by every network metric.

use std::collections::BTreeMap;

use crate::graph::AtlasGraph;

/// Undirected simple graph with positive edge weights and no self-loops.
/// Node `i` is `ids[i]`; ids are in canonical (sorted) order.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub ids: Vec<String>,
    pub adj: Vec<BTreeMap<usize, f64>>,
}

impl Projection {
    pub fn with_nodes(n: usize) -> Self {
        Self {
            ids: (0..n).map(|i| format!("n{i:03}")).collect(),
            adj: vec![BTreeMap::new(); n],
        }
    }

    /// Builds from `(u, v, w)` triples; parallel entries add up and
    /// self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut g = Self::with_nodes(n);
        for &(u, v, w) in edges {
            g.add(u, v, w);
        }
        g
    }

    /// Sums directed multiplicities of both directions; self-loops are left
    /// out.
    pub fn from_atlas(graph: &AtlasGraph) -> Self {
        let ids: Vec<String> = graph.nodes.iter().map(|n| n.id.clone()).collect();
        let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut g = Self {
            adj: vec![BTreeMap::new(); ids.len()],
            ids: ids.clone(),
        };
        for e in &graph.edges {
            if let (Some(&u), Some(&v)) = (index.get(e.source.as_str()), index.get(e.target.as_str())) {
                g.add(u, v, e.weight as f64);
            }
        }
        g
    }

    pub fn add(&mut self, u: usize, v: usize, w: f64) {
        if u == v || w <= 0.0 {
            return;
        }
        *self.adj[u].entry(v).or_insert(0.0) += w;
        *self.adj[v].entry(u).or_insert(0.0) += w;
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn strength(&self, i: usize) -> f64 {
        self.adj[i].values().sum()
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.adj[u].get(&v).copied().unwrap_or(0.0)
    }

    /// Sum of all edge weights, each undirected edge once.
    pub fn total_weight(&self) -> f64 {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.range(u + 1..).map(|(_, w)| *w))
            .sum()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            ids: self.ids.clone(),
            adj: self
                .adj
                .iter()
                .map(|nb| nb.iter().map(|(&j, &w)| (j, w * factor)).collect())
                .collect(),
        }
    }
}
