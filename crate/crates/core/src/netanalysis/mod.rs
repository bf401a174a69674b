//! Community structure and structural-hole metrics. Everything here runs on
//! the undirected weighted projection of the graph, self-loops excluded.

pub mod centrality;
pub mod community;
pub mod projection;
pub mod structural;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::graph::{export_graph, AtlasGraph};

pub use centrality::{betweenness, betweenness_raw};
pub use community::{louvain, modularity, CommunityPartition};
pub use projection::Projection;
pub use structural::{burt_constraint, effective_size, score_with, structural_hole_score, ScoreFormula};

pub const SCHEMA_VERSION: &str = "1.0";
pub const SCHEMA: &str = include_str!("../../schema/atlas-analysis.schema.json");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("partition covers {assigned} of {nodes} nodes")]
    UncoveredNodes { nodes: usize, assigned: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub seed: u64,
    pub score_formula: ScoreFormula,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMetrics {
    pub id: String,
    pub community: usize,
    pub degree: usize,
    pub betweenness: f64,
    /// Absent for nodes without neighbours.
    pub constraint: Option<f64>,
    pub effective_size: Option<f64>,
    pub structural_hole_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub id: String,
    pub home_community: usize,
    pub num_external_communities: usize,
    pub degree: usize,
    pub betweenness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub node_count: usize,
    pub edge_count: usize,
    pub num_communities: usize,
    pub modularity: f64,
    pub constraint_mean: Option<f64>,
    /// Population standard deviation.
    pub constraint_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    pub id: usize,
    pub size: usize,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisMeta {
    pub schema_version: String,
    pub seed: u64,
    pub score_formula: ScoreFormula,
    pub graph_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub meta: AnalysisMeta,
    pub summary: AnalysisSummary,
    pub communities: Vec<Community>,
    /// In node-id order.
    pub nodes: Vec<NodeMetrics>,
    /// Strongest bridges first.
    pub bridges: Vec<BridgeReport>,
}

/// Per-node metrics for a given partition.
pub fn node_metrics(g: &Projection, assignment: &[usize], formula: ScoreFormula) -> Vec<NodeMetrics> {
    let betw = betweenness(g);
    (0..g.len())
        .into_par_iter()
        .map(|i| {
            let constraint = burt_constraint(g, i);
            let esize = effective_size(g, i);
            let score = match (constraint, esize) {
                (Some(c), Some(e)) => score_with(formula, e, betw[i], c),
                _ => None,
            };
            NodeMetrics {
                id: g.ids[i].clone(),
                community: assignment[i],
                degree: g.degree(i),
                betweenness: betw[i],
                constraint,
                effective_size: esize,
                structural_hole_score: score,
            }
        })
        .collect()
}

/// Distinct neighbour communities other than the node's own, sorted by
/// count, then betweenness (both descending), then id.
pub fn active_bridges(g: &Projection, assignment: &[usize], betweenness: &[f64]) -> Vec<BridgeReport> {
    let mut out: Vec<BridgeReport> = (0..g.len())
        .map(|i| {
            let home = assignment[i];
            let external: BTreeSet<usize> = g.adj[i]
                .keys()
                .map(|&j| assignment[j])
                .filter(|&c| c != home)
                .collect();
            BridgeReport {
                id: g.ids[i].clone(),
                home_community: home,
                num_external_communities: external.len(),
                degree: g.degree(i),
                betweenness: betweenness[i],
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.num_external_communities
            .cmp(&a.num_external_communities)
            .then(b.betweenness.total_cmp(&a.betweenness))
            .then(a.id.cmp(&b.id))
    });
    out
}

pub fn summarize(g: &Projection, partition: &CommunityPartition, metrics: &[NodeMetrics]) -> AnalysisSummary {
    let cs: Vec<f64> = metrics.iter().filter_map(|m| m.constraint).collect();
    let (mean, std) = if cs.is_empty() {
        (None, None)
    } else {
        let n = cs.len() as f64;
        let mean = cs.iter().sum::<f64>() / n;
        let var = cs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n;
        (Some(mean), Some(var.sqrt()))
    };
    AnalysisSummary {
        node_count: g.len(),
        edge_count: g.edge_count(),
        num_communities: partition.num_communities,
        modularity: partition.modularity,
        constraint_mean: mean,
        constraint_std: std,
    }
}

pub fn analyze(graph: &AtlasGraph, config: &AnalysisConfig) -> AnalysisReport {
    let g = Projection::from_atlas(graph);
    let partition = louvain(&g, config.seed);
    let nodes = node_metrics(&g, &partition.assignment, config.score_formula);
    let betw: Vec<f64> = nodes.iter().map(|m| m.betweenness).collect();
    let bridges = active_bridges(&g, &partition.assignment, &betw);
    let summary = summarize(&g, &partition, &nodes);
    let mut members: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, &c) in partition.assignment.iter().enumerate() {
        members.entry(c).or_default().push(g.ids[i].clone());
    }
    AnalysisReport {
        meta: AnalysisMeta {
            schema_version: SCHEMA_VERSION.to_string(),
            seed: config.seed,
            score_formula: config.score_formula,
            graph_digest: canonical::sha256_hex(&export_graph(graph)),
        },
        summary,
        communities: members
            .into_iter()
            .map(|(id, members)| Community {
                id,
                size: members.len(),
                members,
            })
            .collect(),
        nodes,
        bridges,
    }
}

/// Canonical export bytes; floats rounded to nine decimals.
pub fn export_analysis(report: &AnalysisReport) -> Vec<u8> {
    canonical::to_bytes(report)
}

fn render_table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |out: &mut String, cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(out, &header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    for r in rows {
        line(out, r);
    }
}

/// Nodes ranked by structural-hole score, highest first; ties by id.
pub fn top_structural_holes(report: &AnalysisReport, k: usize) -> Vec<&NodeMetrics> {
    let mut ranked: Vec<&NodeMetrics> = report.nodes.iter().filter(|m| m.structural_hole_score.is_some()).collect();
    ranked.sort_by(|a, b| {
        b.structural_hole_score
            .unwrap_or(0.0)
            .total_cmp(&a.structural_hole_score.unwrap_or(0.0))
            .then(a.id.cmp(&b.id))
    });
    ranked.truncate(k);
    ranked
}

/// The two top-k tables (structural holes, community bridges) as aligned
/// text.
pub fn render_tables(report: &AnalysisReport, k: usize) -> String {
    let f = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
    let mut out = String::new();
    let _ = writeln!(out, "Top {k} nodes spanning structural holes");
    let rows: Vec<Vec<String>> = top_structural_holes(report, k)
        .into_iter()
        .map(|m| {
            vec![
                m.id.clone(),
                m.community.to_string(),
                f(m.constraint),
                format!("{:.6}", m.betweenness),
                f(m.effective_size),
                f(m.structural_hole_score),
            ]
        })
        .collect();
    render_table(
        &mut out,
        &["node", "community", "constraint", "betweenness", "effective_size", "structural_hole_score"],
        &rows,
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "Top {k} community bridges");
    let rows: Vec<Vec<String>> = report
        .bridges
        .iter()
        .take(k)
        .map(|b| {
            vec![
                b.id.clone(),
                b.home_community.to_string(),
                b.num_external_communities.to_string(),
                b.degree.to_string(),
                format!("{:.6}", b.betweenness),
            ]
        })
        .collect();
    render_table(
        &mut out,
        &["node", "home_community", "num_external_communities", "degree", "betweenness"],
        &rows,
    );
    out
}
