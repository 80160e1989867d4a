//! Malicious-fraction sweep for DOS, written to `sweep.csv` in a temp dir.
//!
//! Run with `cargo run --release --example sweep`.

use dosfl::cli::{cmd_sweep, SweepParam};
use dosfl::ExperimentConfig;

fn main() -> dosfl::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.train.rounds = 40;
    cfg.output_dir = std::env::temp_dir().join("dosfl-sweep-example");
    let param = SweepParam::MaliciousFraction;
    for row in cmd_sweep(&cfg, param, &param.default_values())? {
        println!("{} = {:.1}: average {:.3}, final {:.3}", row.sweep_param, row.value, row.avg_metric, row.final_metric);
    }
    println!("wrote {}", cfg.output_dir.join("sweep.csv").display());
    Ok(())
}
