//! Embeds a handful of keys with the local hashing embedder and merges
//! near-synonyms with DBSCAN.
//!
//!     cargo run --example merge_synonyms

use atlas::notation::parse_key;
use atlas::provider::HashingEmbedder;
use atlas::semantics::{build_merge_map, EmbeddingSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = ["ai:gpt4", "ai:gpt_4", "ai:chatbot", "ai:chat_bot", "human:student", "human:teacher"];
    let keys = raw.iter().map(|k| parse_key(k)).collect::<Result<Vec<_>, _>>()?;
    let embedder = HashingEmbedder { dim: 128 };
    let vectors = keys
        .iter()
        .map(|k| embedder.embed_text(&k.canonical()).into_iter().map(f64::from).collect())
        .collect();
    let set = EmbeddingSet::new(keys, vectors, "hashing-trigram-128".into())?;
    let map = build_merge_map(&set, 0.2, 2)?;
    for c in &map.clusters {
        let members: Vec<String> = c.members.iter().map(ToString::to_string).collect();
        println!("{} <- {}", c.canonical, members.join(", "));
    }
    Ok(())
}
