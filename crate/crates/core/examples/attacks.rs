//! Each attack applied to one honest update, and the preset scenarios.
//!
//! Run with `cargo run --example attacks`.

use dosfl::attacks::{attack_gaussian_noise, attack_scale};
use dosfl::{AttackParams, ParameterVector, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dosfl::Result<()> {
    let honest = ParameterVector::new(vec![0.5, -0.25, 1.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    println!("honest      {:?}", honest.as_slice());
    println!("noise(1)    {:?}", attack_gaussian_noise(&honest, 1.0, &mut rng)?.as_slice());
    println!("scale(100)  {:?}", attack_scale(&honest, 100.0)?.as_slice());
    println!("scale(-0.5) {:?}", attack_scale(&honest, -0.5)?.as_slice());

    let params = AttackParams::default();
    println!("\nscenario plans for 10 clients:");
    for name in Scenario::preset_names() {
        let plan = Scenario::preset(name)?.plan(10, &params)?;
        let roles: Vec<String> = plan
            .assignments()
            .iter()
            .map(|(id, kind)| format!("{id}:{kind}"))
            .collect();
        println!("  {name:<16} {}", roles.join(" "));
    }
    Ok(())
}
