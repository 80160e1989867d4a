//! IID and Dirichlet label-skew partitions of a synthetic dataset.
//!
//! Run with `cargo run --example non_iid_partition`.

use dosfl::harness::data::{generate_synthetic, partition_iid, partition_label_skew, SyntheticSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dosfl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spec = SyntheticSpec {
        class_count: 4,
        input_dim: 5,
        samples_per_class: 100,
        class_separation: 6.0,
    };
    let ds = generate_synthetic(&spec, &mut rng)?;

    println!("iid:");
    for (i, s) in partition_iid(&ds, 5, &mut rng)?.iter().enumerate() {
        println!("  client {i}: class counts {:?}", s.class_counts());
    }
    for alpha in [100.0, 1.0, 0.1] {
        println!("label skew, alpha = {alpha}:");
        for (i, s) in partition_label_skew(&ds, 5, alpha, &mut rng)?.iter().enumerate() {
            println!("  client {i}: class counts {:?}", s.class_counts());
        }
    }
    Ok(())
}
