//! Rank-based AUC metrics and accuracy.
//!
//! `macro_auc` averages one-vs-rest AUCs over classes. `pairwise_auc` is
//! the Hand & Till multi-class measure: the mean over unordered class pairs
//! of `(A(i|j) + A(j|i)) / 2`, where `A(i|j)` ranks class-`i` probabilities
//! of class-`i` samples against those of class-`j` samples. Ties count one
//! half (midranks).

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub macro_auc: f64,
    pub pairwise_auc: f64,
    pub accuracy: f64,
    /// Classes missing from the test labels; left out of both AUC means.
    pub excluded_classes: Vec<usize>,
}

/// Mann–Whitney AUC with midranks: `P(pos > neg) + P(pos = neg) / 2`.
/// `None` when either group is empty.
pub fn binary_auc(positive: &[f64], negative: &[f64]) -> Option<f64> {
    if positive.is_empty() || negative.is_empty() {
        return None;
    }
    let mut all: Vec<(f64, bool)> = positive
        .iter()
        .map(|&s| (s, true))
        .chain(negative.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their average.
        let midrank = (i + j + 2) as f64 / 2.0;
        rank_sum += midrank * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    let np = positive.len() as f64;
    let nn = negative.len() as f64;
    Some((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Metrics from per-sample class probabilities (`probs[i][c]`).
pub fn score_metrics(probs: &[Vec<f64>], labels: &[usize], class_count: usize) -> Result<Metrics> {
    if probs.is_empty() || probs.len() != labels.len() {
        return Err(Error::config("need one probability row per test label"));
    }
    let present: Vec<bool> = (0..class_count).map(|c| labels.contains(&c)).collect();
    let excluded_classes: Vec<usize> = (0..class_count).filter(|&c| !present[c]).collect();

    let scores_of = |class: usize, group: usize| -> Vec<f64> {
        probs
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == group)
            .map(|(p, _)| p[class])
            .collect()
    };

    let ovr: Vec<f64> = (0..class_count)
        .filter_map(|c| {
            let pos = scores_of(c, c);
            let neg: Vec<f64> = probs
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l != c)
                .map(|(p, _)| p[c])
                .collect();
            binary_auc(&pos, &neg)
        })
        .collect();

    let mut pairs = Vec::new();
    for i in 0..class_count {
        for j in (i + 1)..class_count {
            if !(present[i] && present[j]) {
                continue;
            }
            let a_ij = binary_auc(&scores_of(i, i), &scores_of(i, j));
            let a_ji = binary_auc(&scores_of(j, j), &scores_of(j, i));
            if let (Some(a), Some(b)) = (a_ij, a_ji) {
                pairs.push((a + b) / 2.0);
            }
        }
    }

    if ovr.is_empty() || pairs.is_empty() {
        return Err(Error::config("test set must contain at least two classes"));
    }

    let correct = probs
        .iter()
        .zip(labels)
        .filter(|(p, &l)| argmax(p) == l)
        .count();

    Ok(Metrics {
        macro_auc: mean(&ovr),
        pairwise_auc: mean(&pairs),
        accuracy: correct as f64 / labels.len() as f64,
        excluded_classes,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};

    /// Counts pairs directly.
    fn auc_oracle(pos: &[f64], neg: &[f64]) -> f64 {
        let mut s = 0.0;
        for &p in pos {
            for &n in neg {
                s += if p > n {
                    1.0
                } else if p == n {
                    0.5
                } else {
                    0.0
                };
            }
        }
        s / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn perfect_ranking() {
        let probs = vec![vec![0.9, 0.1], vec![0.8, 0.2], vec![0.3, 0.7], vec![0.1, 0.9]];
        let m = score_metrics(&probs, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(m.macro_auc, 1.0);
        assert_eq!(m.pairwise_auc, 1.0);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn constant_scores_give_half() {
        let probs = vec![vec![1.0 / 3.0; 3]; 6];
        let m = score_metrics(&probs, &[0, 1, 2, 0, 1, 2], 3).unwrap();
        assert_eq!(m.macro_auc, 0.5);
        assert_eq!(m.pairwise_auc, 0.5);
    }

    #[test]
    fn two_classes_pairwise_equals_macro() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let probs: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let p: f64 = rng.random();
                vec![p, 1.0 - p]
            })
            .collect();
        let labels: Vec<usize> = (0..50).map(|_| rng.random_range(0..2)).collect();
        let m = score_metrics(&probs, &labels, 2).unwrap();
        assert_abs_diff_eq!(m.macro_auc, m.pairwise_auc, epsilon = 1e-12);
    }

    #[test]
    fn absent_class_is_excluded() {
        let probs = vec![vec![0.7, 0.2, 0.1], vec![0.2, 0.7, 0.1], vec![0.6, 0.3, 0.1]];
        let m = score_metrics(&probs, &[0, 1, 0], 3).unwrap();
        assert_eq!(m.excluded_classes, vec![2]);
        assert_eq!(m.pairwise_auc, 1.0);
        assert!(score_metrics(&probs, &[0, 0, 0], 3).is_err());
    }

    #[test]
    fn shuffled_labels_are_near_chance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let probs: Vec<Vec<f64>> = (0..1000)
            .map(|_| {
                let raw: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect();
        let mut labels: Vec<usize> = (0..1000).map(|i| i % 4).collect();
        labels.shuffle(&mut rng);
        let m = score_metrics(&probs, &labels, 4).unwrap();
        assert!((m.macro_auc - 0.5).abs() < 0.05, "{}", m.macro_auc);
        assert!((m.pairwise_auc - 0.5).abs() < 0.05, "{}", m.pairwise_auc);
    }

    proptest! {
        #[test]
        fn midrank_auc_matches_pair_count(
            pos in proptest::collection::vec(0u8..6, 1..15),
            neg in proptest::collection::vec(0u8..6, 1..15),
        ) {
            let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
            let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
            let got = binary_auc(&pos, &neg).unwrap();
            prop_assert!((got - auc_oracle(&pos, &neg)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&got));
        }
    }
}
