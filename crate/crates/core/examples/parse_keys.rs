//! Parses entity keys and validates one triplet.
//!
//!     cargo run --example parse_keys -- "Human:Student(Medical) > trust(AI)" "ai:gpt 4"

use atlas::notation::{parse_key, validate_triplet, TripletFields};

fn main() {
    let mut inputs: Vec<String> = std::env::args().skip(1).collect();
    if inputs.is_empty() {
        inputs = ["human:student(medical)>trust(ai)", "human:#trust", "human:usage:multipurpose", "robot:arm", "ai:llm>"]
            .map(String::from)
            .to_vec();
    }
    for input in &inputs {
        match parse_key(input) {
            Ok(k) => println!("{input:<40} -> {k}"),
            Err(e) => println!("{input:<40} !! {e}"),
        }
    }

    let verdict = validate_triplet(&TripletFields {
        cause: "ai:chatbot>explanation".into(),
        relationship: "increases".into(),
        effect: "human:student>#trust".into(),
        net_outcome: "positive".into(),
    });
    println!("\n{:?}", verdict.triplet);
}
