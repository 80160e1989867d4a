//! The crafted attack's lambda search against a Krum oracle.
//!
//! Colluding clients move the model against the benign direction by the
//! largest `lambda` (halving from the start value) that Krum still selects.
//!
//! Run with `cargo run --example crafted_attack`.

use dosfl::attacks::{attack_crafted, search_crafted_lambda};
use dosfl::{AggregatorSpec, ParameterVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dosfl::Result<()> {
    let global = ParameterVector::new(vec![0.0, 0.0])?;
    let honest_of_malicious: Vec<ParameterVector> = [[0.10, 0.20], [0.12, 0.18], [0.08, 0.22], [0.11, 0.21]]
        .iter()
        .map(|p| ParameterVector::new(p.to_vec()))
        .collect::<dosfl::Result<_>>()?;
    let krum = AggregatorSpec::krum(None);

    for steps in [0, 4, 16] {
        let lambda = search_crafted_lambda(&global, &honest_of_malicious, 1.0, steps, &krum)?;
        println!("halvings {steps:>2}: lambda = {lambda}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let crafted = attack_crafted(&global, &honest_of_malicious, 1.0, 16, &krum, &mut rng)?;
    for (i, c) in crafted.iter().enumerate() {
        println!("malicious {i}: {:?}", c.as_slice());
    }
    Ok(())
}
