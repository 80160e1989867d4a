//! Pairwise Euclidean and cosine distance matrices for a handful of updates.
//!
//! Run with `cargo run --example distances`.

use dosfl::{cosine_distance, euclidean_distance, pairwise_distances, ClientUpdate, ParameterVector};

fn main() -> dosfl::Result<()> {
    let a = [3.0, 4.0];
    let b = [6.0, 8.0];
    println!("euclidean(a, b) = {}", euclidean_distance(&a, &b)?);
    // Same direction, so cosine distance ignores the length difference.
    println!("cosine(a, b)    = {}", cosine_distance(&a, &b)?);

    let updates: Vec<ClientUpdate> = [[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [-5.0, -5.0]]
        .iter()
        .enumerate()
        .map(|(i, p)| Ok(ClientUpdate::new(i, ParameterVector::new(p.to_vec())?)))
        .collect::<dosfl::Result<_>>()?;
    let d = pairwise_distances(&updates)?;
    for (name, m) in [("euclidean", &d.euclidean), ("cosine", &d.cosine)] {
        println!("\n{name}:");
        for row in m.to_rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:7.3}")).collect();
            println!("  {}", cells.join(" "));
        }
    }
    Ok(())
}
