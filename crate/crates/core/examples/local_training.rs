//! Local SGD for the logistic and one-hidden-layer models on one shard.
//!
//! Run with `cargo run --example local_training`.

use dosfl::harness::data::{generate_synthetic, SyntheticSpec};
use dosfl::harness::model::{local_train, ModelSpec, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dosfl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let spec = SyntheticSpec {
        class_count: 3,
        input_dim: 4,
        samples_per_class: 60,
        class_separation: 4.0,
    };
    let ds = generate_synthetic(&spec, &mut rng)?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let train = TrainConfig {
        learning_rate: 0.05,
        local_steps: 1,
        ..TrainConfig::default()
    };

    for model in [ModelSpec::logistic(4, 3), ModelSpec::mlp1(4, 16, 3)] {
        let mut params = model.init_params(&mut rng)?;
        print!("{:?} ({} params): loss", model.kind, model.param_count());
        for _ in 0..5 {
            print!(" {:.4}", model.loss(&params, &ds, &all)?);
            params = local_train(&model, &params, &ds, &train, &mut rng)?;
        }
        println!();
    }
    Ok(())
}
