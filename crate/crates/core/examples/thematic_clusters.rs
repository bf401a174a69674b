//! Chooses k by silhouette on three planted groups and prints the scores.
//!
//!     cargo run --example thematic_clusters

use atlas::semantics::{kmeans, select_k, KMeansOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vectors: Vec<Vec<f64>> = (0..3)
        .flat_map(|axis| (0..15).map(move |_| axis))
        .map(|axis| (0..6).map(|j| if j == axis { 1.0 } else { 0.0 } + rng.random_range(-0.1..0.1)).collect())
        .collect();
    let opts = KMeansOptions::default();
    let sel = select_k(&vectors, 2, 8, 0, opts)?;
    for (k, s) in &sel.scores {
        println!("k = {k}: silhouette {s:.3}");
    }
    let run = kmeans(&vectors, sel.k, 0, opts)?;
    println!("chose k = {}, objective {:.4}, {} iterations", sel.k, run.objective, run.history.len());
    println!("{:?}", run.assignment);
    Ok(())
}
