//! Communities, betweenness and Burt's measures on Zachary's karate club.
//!
//!     cargo run --example network_analysis

use atlas::netanalysis::{betweenness, burt_constraint, effective_size, louvain, structural_hole_score, Projection};

const KARATE: &[(usize, &[usize])] = &[
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

fn main() {
    let edges: Vec<(usize, usize, f64)> = KARATE
        .iter()
        .flat_map(|(u, vs)| vs.iter().map(move |&v| (*u, v, 1.0)))
        .collect();
    let g = Projection::from_edges(34, &edges);
    let p = louvain(&g, 0);
    println!("{} communities, Q = {:.4}", p.num_communities, p.modularity);

    let b = betweenness(&g);
    let mut rows: Vec<(usize, f64, f64, f64, f64)> = (0..34)
        .filter_map(|i| {
            let c = burt_constraint(&g, i)?;
            let e = effective_size(&g, i)?;
            Some((i, c, b[i], e, structural_hole_score(e, b[i], c)?))
        })
        .collect();
    rows.sort_by(|x, y| y.4.total_cmp(&x.4));
    println!("{:>4} {:>10} {:>11} {:>8} {:>8}", "node", "constraint", "betweenness", "eff_size", "score");
    for (i, c, bt, e, s) in rows.iter().take(5) {
        println!("{i:>4} {c:>10.4} {bt:>11.4} {e:>8.3} {s:>8.3}");
    }
}
