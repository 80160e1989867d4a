//! One DOS aggregation round: distances, outlier scores, softmax weights.
//!
//! Run with `cargo run --example dos_aggregation`.

use dosfl::{aggregate_dos, ClientUpdate, ParameterVector};

fn main() -> dosfl::Result<()> {
    let points = [
        [1.0, 1.0],
        [1.1, 0.9],
        [0.9, 1.05],
        [1.05, 1.1],
        [0.95, 0.95],
        [40.0, -40.0], // poisoned
    ];
    let updates: Vec<ClientUpdate> = points
        .iter()
        .enumerate()
        .map(|(i, p)| Ok(ClientUpdate::new(i, ParameterVector::new(p.to_vec())?)))
        .collect::<dosfl::Result<_>>()?;

    let res = aggregate_dos(&updates)?;
    let scores = res.scores.as_ref().expect("dos reports scores");
    println!("client  score    weight");
    for (k, id) in res.client_ids.iter().enumerate() {
        println!("{id:>6}  {:7.4}  {:.5}", scores[k], res.weight_of(*id).unwrap());
    }
    println!("new global: {:?}", res.new_global.as_slice());
    Ok(())
}
