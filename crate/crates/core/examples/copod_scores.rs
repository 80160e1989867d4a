//! COPOD outlier scores on a small matrix, plus the tail pieces they come from.
//!
//! Run with `cargo run --example copod_scores`.

use dosfl::copod::{ecdf_left, ecdf_right, skew_sign};
use dosfl::{copod_scores, ScoreMatrix};

fn main() -> dosfl::Result<()> {
    // Row 4 is far out in both columns.
    let rows = vec![
        vec![1.0, 2.0],
        vec![1.2, 2.1],
        vec![0.9, 1.8],
        vec![1.1, 2.2],
        vec![9.0, -7.0],
    ];
    let m = ScoreMatrix::from_rows(&rows)?;
    for j in 0..2 {
        let col = m.matrix().column(j);
        println!("column {j}: left {:?}", ecdf_left(&col));
        println!("          right {:?}", ecdf_right(&col));
        println!("          skew sign {}", skew_sign(&col));
    }
    let scores = copod_scores(&m)?;
    for (i, s) in scores.iter().enumerate() {
        println!("row {i}: {s:.4}");
    }
    Ok(())
}
