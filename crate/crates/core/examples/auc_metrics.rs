//! Macro one-vs-rest AUC, pairwise multi-class AUC and accuracy.
//!
//! Run with `cargo run --example auc_metrics`.

use dosfl::harness::metrics::{binary_auc, score_metrics};

fn main() -> dosfl::Result<()> {
    // Ties count one half.
    println!("binary AUC {:?}", binary_auc(&[0.9, 0.6, 0.4], &[0.4, 0.2]));

    let probs = vec![
        vec![0.7, 0.2, 0.1],
        vec![0.5, 0.3, 0.2],
        vec![0.2, 0.6, 0.2],
        vec![0.4, 0.45, 0.15],
        vec![0.1, 0.2, 0.7],
        vec![0.3, 0.3, 0.4],
    ];
    let labels = [0, 1, 1, 0, 2, 2];
    let m = score_metrics(&probs, &labels, 3)?;
    println!("macro AUC    {:.4}", m.macro_auc);
    println!("pairwise AUC {:.4}", m.pairwise_auc);
    println!("accuracy     {:.4}", m.accuracy);
    Ok(())
}
