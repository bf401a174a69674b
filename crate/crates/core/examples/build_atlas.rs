//! Builds a graph from a few triplets and prints its canonical export.
//!
//!     cargo run --example build_atlas

use atlas::extraction::RawTriplet;
use atlas::graph::{build_graph, export_graph};
use atlas::notation::{parse_key, Outcome, Relationship};

fn triplet(i: usize, cause: &str, rel: Relationship, effect: &str) -> RawTriplet {
    RawTriplet {
        finding_id: format!("p{i}#f1"),
        paper_id: format!("p{i}"),
        finding: format!("finding {i}"),
        cause: parse_key(cause).expect("valid key"),
        relationship: rel,
        effect: parse_key(effect).expect("valid key"),
        net_outcome: Outcome::Positive,
    }
}

fn main() {
    let people = ["student", "teacher", "nurse"];
    let triplets: Vec<RawTriplet> = people
        .iter()
        .enumerate()
        .map(|(i, p)| triplet(i, "ai:chatbot>explanation", Relationship::Increases, &format!("human:{p}>#trust")))
        .collect();
    // Three entities share `#trust`, so a threshold of 3 splits it into one node.
    for threshold in [3, 4] {
        let g = build_graph(&triplets, threshold);
        let ids: Vec<&str> = g.nodes.iter().map(|n| n.id.as_str()).collect();
        println!("threshold {threshold}: {ids:?}");
    }
    print!("{}", String::from_utf8(export_graph(&build_graph(&triplets, 3))).expect("utf-8"));
}
