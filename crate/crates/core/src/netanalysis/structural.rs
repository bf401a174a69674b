//! Burt's structural-hole measures on the weighted projection.

use serde::{Deserialize, Serialize};

use super::Projection;

/// Proportional tie strength `p_ij = w_ij / Σ_k w_ik`.
fn proportion(g: &Projection, i: usize, j: usize, strength_i: f64) -> f64 {
    if strength_i > 0.0 {
        g.weight(i, j) / strength_i
    } else {
        0.0
    }
}

/// `C_i = Σ_j (p_ij + Σ_q p_iq·p_qj)²` over neighbours `j` and `q ≠ i, j`.
/// `None` for isolated nodes.
pub fn burt_constraint(g: &Projection, i: usize) -> Option<f64> {
    if g.degree(i) == 0 {
        return None;
    }
    let s_i = g.strength(i);
    let strengths: Vec<(usize, f64)> = g.adj[i].keys().map(|&q| (q, g.strength(q))).collect();
    let mut c = 0.0;
    for &j in g.adj[i].keys() {
        let mut indirect = 0.0;
        for &(q, s_q) in &strengths {
            if q != j {
                indirect += proportion(g, i, q, s_i) * proportion(g, q, j, s_q);
            }
        }
        let local = proportion(g, i, j, s_i) + indirect;
        c += local * local;
    }
    Some(c)
}

/// Burt effective size, weighted form:
/// `Σ_j (1 − Σ_{q≠j} p_iq·m_jq)` with `m_jq = w_jq / max_k w_jk`.
/// `None` for isolated nodes.
pub fn effective_size(g: &Projection, i: usize) -> Option<f64> {
    if g.degree(i) == 0 {
        return None;
    }
    let s_i = g.strength(i);
    let mut total = 0.0;
    for &j in g.adj[i].keys() {
        let max_j = g.adj[j].values().copied().fold(0.0, f64::max);
        let mut redundancy = 0.0;
        for &q in g.adj[i].keys() {
            if q != j && max_j > 0.0 {
                redundancy += proportion(g, i, q, s_i) * g.weight(j, q) / max_j;
            }
        }
        total += 1.0 - redundancy;
    }
    Some(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFormula {
    /// `effective_size × betweenness / constraint`.
    #[default]
    Composite,
    /// `effective_size / (100 × constraint)`, which matches published
    /// structural-hole tables built from networkx measures.
    SizeOverConstraint,
}

impl std::str::FromStr for ScoreFormula {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().replace('-', "_").as_str() {
            "composite" => Ok(ScoreFormula::Composite),
            "size_over_constraint" => Ok(ScoreFormula::SizeOverConstraint),
            other => Err(format!("unknown score formula `{other}`")),
        }
    }
}

/// `None` when the constraint is not positive.
pub fn structural_hole_score(effective_size: f64, betweenness: f64, constraint: f64) -> Option<f64> {
    score_with(ScoreFormula::Composite, effective_size, betweenness, constraint)
}

pub fn score_with(formula: ScoreFormula, effective_size: f64, betweenness: f64, constraint: f64) -> Option<f64> {
    if constraint <= 0.0 {
        return None;
    }
    Some(match formula {
        ScoreFormula::Composite => effective_size * betweenness / constraint,
        ScoreFormula::SizeOverConstraint => effective_size / (100.0 * constraint),
    })
}
