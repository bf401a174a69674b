//! Density-based clustering under cosine distance.
//!
//! A point is a core point when at least `min_pts` points (itself included)
//! lie within cosine distance `eps`. Clusters are the connected components of
//! core points; they are numbered in order of their first core point. A
//! non-core point within `eps` of a core point joins the lowest-numbered such
//! cluster, which makes the result depend only on the input order and not on
//! traversal order. Everything else is noise.

use std::collections::VecDeque;

use super::{cosine_distance, SemanticsError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbscanLabels {
    /// Cluster index per input point, `None` for noise.
    pub labels: Vec<Option<usize>>,
    pub num_clusters: usize,
}

impl DbscanLabels {
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(c) = l {
                out[*c].push(i);
            }
        }
        out
    }

    pub fn noise(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i].is_none()).collect()
    }
}

pub fn check_params(eps: f64, min_pts: usize) -> Result<(), SemanticsError> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(SemanticsError::InvalidParameter(format!("eps must lie in (0, 2), got {eps}")));
    }
    if min_pts < 2 {
        return Err(SemanticsError::InvalidParameter(format!("min_pts must be at least 2, got {min_pts}")));
    }
    Ok(())
}

pub fn dbscan(vectors: &[Vec<f64>], eps: f64, min_pts: usize) -> Result<DbscanLabels, SemanticsError> {
    check_params(eps, min_pts)?;
    super::check_dims(vectors)?;
    let n = vectors.len();

    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| cosine_distance(&vectors[i], &vectors[j]) <= eps)
                .collect()
        })
        .collect();
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut num_clusters = 0;
    for start in 0..n {
        if !is_core[start] || labels[start].is_some() {
            continue;
        }
        let cluster = num_clusters;
        num_clusters += 1;
        labels[start] = Some(cluster);
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                if is_core[q] && labels[q].is_none() {
                    labels[q] = Some(cluster);
                    queue.push_back(q);
                }
            }
        }
    }

    for i in 0..n {
        if is_core[i] {
            continue;
        }
        labels[i] = neighbors[i]
            .iter()
            .filter(|&&j| is_core[j])
            .filter_map(|&j| labels[j])
            .min();
    }

    Ok(DbscanLabels { labels, num_clusters })
}
