//! A full federated run under 40% Gaussian-noise clients, DOS against FedAvg.
//!
//! Run with `cargo run --release --example run_experiment`.

use dosfl::{run_experiment, AggregatorKind, AggregatorSpec, ExperimentConfig, Scenario};

fn main() -> dosfl::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.train.rounds = 40;
    cfg.scenario = Scenario::preset("noise_40")?;

    for kind in [AggregatorKind::FedAvg, AggregatorKind::Dos] {
        cfg.aggregator = AggregatorSpec::new(kind);
        let out = run_experiment(&cfg)?;
        println!("{kind}:");
        for r in out.records.iter().filter(|r| r.round % 10 == 9) {
            println!(
                "  round {:>3}  accuracy {:.3}  macro AUC {:.3}",
                r.round, r.metrics.accuracy, r.metrics.macro_auc
            );
        }
        if let Some(last) = out.records.last() {
            let w: Vec<String> = last
                .weights
                .iter()
                .map(|w| w.map_or("NA".into(), |w| format!("{w:.3}")))
                .collect();
            println!("  last-round weights {}", w.join(" "));
        }
    }
    Ok(())
}
