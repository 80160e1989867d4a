//! The five aggregation rules on the same poisoned round.
//!
//! Run with `cargo run --example compare_rules`.

use dosfl::{AggregationRule, AggregatorKind, AggregatorSpec, ClientUpdate, ParameterVector};

fn main() -> dosfl::Result<()> {
    let honest = [[1.0, 2.0], [1.2, 1.9], [0.8, 2.1], [1.1, 2.05], [0.9, 1.95], [1.0, 2.2]];
    let malicious = [[-30.0, 50.0], [25.0, -60.0]];
    let updates: Vec<ClientUpdate> = honest
        .iter()
        .chain(&malicious)
        .enumerate()
        .map(|(i, p)| Ok(ClientUpdate::new(i, ParameterVector::new(p.to_vec())?)))
        .collect::<dosfl::Result<_>>()?;

    for kind in AggregatorKind::ALL {
        let spec = AggregatorSpec::new(kind);
        let res = spec.aggregate(&updates)?;
        let g = res.new_global.as_slice();
        let extra = match res.selected_client {
            Some(c) => format!(" (selected client {c})"),
            None => String::new(),
        };
        println!("{:<13} [{:8.4}, {:8.4}]{extra}", spec.name(), g[0], g[1]);
    }
    Ok(())
}
