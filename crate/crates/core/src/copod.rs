//! Copula-based outlier detection (COPOD).
//!
//! Every column of the input matrix is turned into left- and right-tail
//! empirical CDF values. A row's score is the largest of three negative
//! log-likelihood sums: left tails, right tails, and the tail selected by
//! each column's skewness. The detector has no tunable parameters.
//!
//! Ties use weak inequalities on both tails, so every ECDF value is at least
//! `1/n` and every logarithm is finite. A constant column contributes zero
//! to every row.

use std::cmp::Ordering;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::params::{DistancePair, Matrix};

const SKEW_EPSILON: f64 = 1e-12;

/// An `n × d` matrix of finite values with `n ≥ 2`; rows are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix(Matrix);

impl ScoreMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows() < 2 {
            return Err(Error::config(format!(
                "COPOD needs at least 2 rows, got {}",
                m.rows()
            )));
        }
        if m.cols() == 0 {
            return Err(Error::config("COPOD needs at least one column"));
        }
        for r in 0..m.rows() {
            if let Some(c) = m.row(r).iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("entry ({r}, {c}) is not finite")));
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

/// Per-row outlier scores `rᵢ ≥ 0`; larger means more anomalous.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierScores(Vec<f64>);

impl OutlierScores {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for OutlierScores {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn sorted_copy(column: &[f64]) -> Vec<f64> {
    let mut s = column.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    s
}

/// `F̂(xᵢ) = |{k : x_k ≤ xᵢ}| / n` for every entry of `column`.
pub fn ecdf_left(column: &[f64]) -> Vec<f64> {
    let n = column.len() as f64;
    let sorted = sorted_copy(column);
    column
        .iter()
        .map(|&x| sorted.partition_point(|&v| v <= x) as f64 / n)
        .collect()
}

/// `F̄(xᵢ) = |{k : x_k ≥ xᵢ}| / n` for every entry of `column`.
pub fn ecdf_right(column: &[f64]) -> Vec<f64> {
    let len = column.len();
    let n = len as f64;
    let sorted = sorted_copy(column);
    column
        .iter()
        .map(|&x| (len - sorted.partition_point(|&v| v < x)) as f64 / n)
        .collect()
}

/// Sign of the third central moment, with near-zero moments mapped to 0.
pub fn skew_sign(column: &[f64]) -> i8 {
    let n = column.len() as f64;
    if column.is_empty() {
        return 0;
    }
    let mean = column.iter().sum::<f64>() / n;
    let m3 = column.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    if m3.abs() < SKEW_EPSILON {
        0
    } else if m3 > 0.0 {
        1
    } else {
        -1
    }
}

pub fn copod_scores(m: &ScoreMatrix) -> Result<OutlierScores> {
    let m = m.matrix();
    let n = m.rows();
    let mut p_left = vec![0.0; n];
    let mut p_right = vec![0.0; n];
    let mut p_skew = vec![0.0; n];
    for j in 0..m.cols() {
        let column = m.column(j);
        let u = ecdf_left(&column);
        let v = ecdf_right(&column);
        let use_left = skew_sign(&column) < 0;
        for i in 0..n {
            let (lu, lv) = (-u[i].ln(), -v[i].ln());
            p_left[i] += lu;
            p_right[i] += lv;
            p_skew[i] += if use_left { lu } else { lv };
        }
    }
    let scores = (0..n)
        .map(|i| p_left[i].max(p_right[i]).max(p_skew[i]))
        .collect();
    Ok(OutlierScores(scores))
}

/// `r = (COPOD(M_E) + COPOD(M_C)) / 2`
pub fn dos_outlier_scores(d: &DistancePair) -> Result<OutlierScores> {
    let r_e = copod_scores(&ScoreMatrix::new(d.euclidean.clone())?)?;
    let r_c = copod_scores(&ScoreMatrix::new(d.cosine.clone())?)?;
    Ok(average_scores(&r_e, &r_c))
}

fn average_scores(a: &OutlierScores, b: &OutlierScores) -> OutlierScores {
    OutlierScores(a.iter().zip(b.iter()).map(|(x, y)| (x + y) / 2.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{pairwise_distances, ClientUpdate, ParameterVector};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Brute-force COPOD: explicit U/V/W tables by pairwise counting.
    fn copod_oracle(rows: &[Vec<f64>]) -> Vec<f64> {
        let n = rows.len();
        let d = rows[0].len();
        let nf = n as f64;
        let mut u = vec![vec![0.0; d]; n];
        let mut v = vec![vec![0.0; d]; n];
        let mut w = vec![vec![0.0; d]; n];
        for j in 0..d {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / nf;
            let m3 = rows.iter().map(|r| (r[j] - mean).powi(3)).sum::<f64>() / nf;
            let negative_skew = m3 <= -1e-12;
            for i in 0..n {
                let le = rows.iter().filter(|r| r[j] <= rows[i][j]).count();
                let ge = rows.iter().filter(|r| r[j] >= rows[i][j]).count();
                u[i][j] = le as f64 / nf;
                v[i][j] = ge as f64 / nf;
                w[i][j] = if negative_skew { u[i][j] } else { v[i][j] };
            }
        }
        (0..n)
            .map(|i| {
                let l: f64 = (0..d).map(|j| -u[i][j].ln()).sum();
                let r: f64 = (0..d).map(|j| -v[i][j].ln()).sum();
                let s: f64 = (0..d).map(|j| -w[i][j].ln()).sum();
                l.max(r).max(s)
            })
            .collect()
    }

    #[test]
    fn ecdf_examples() {
        assert_eq!(ecdf_left(&[1.0, 2.0, 3.0]), vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert_eq!(ecdf_left(&[5.0, 5.0, 5.0]), vec![1.0, 1.0, 1.0]);
        assert_eq!(ecdf_left(&[3.0, 1.0, 2.0, 2.0]), vec![1.0, 0.25, 0.75, 0.75]);
        assert_eq!(ecdf_right(&[1.0, 2.0, 3.0]), vec![1.0, 2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(ecdf_right(&[5.0, 5.0, 5.0]), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn skew_examples() {
        assert_eq!(skew_sign(&[1.0, 2.0, 9.0]), 1);
        assert_eq!(skew_sign(&[-9.0, -2.0, -1.0]), -1);
        assert_eq!(skew_sign(&[1.0, 2.0, 3.0]), 0);
        assert_eq!(skew_sign(&[4.0, 4.0]), 0);
    }

    #[test]
    fn identical_rows_score_zero() {
        let m = ScoreMatrix::from_rows(&vec![vec![1.0, -3.0, 2.5]; 4]).unwrap();
        assert!(copod_scores(&m).unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn single_column_outlier() {
        let rows = vec![vec![0.0], vec![0.0], vec![0.0], vec![10.0]];
        let scores = copod_scores(&ScoreMatrix::from_rows(&rows).unwrap()).unwrap();
        let oracle = copod_oracle(&rows);
        // U = 3/4 for the tied rows, V = 1/4 for the outlier.
        assert_abs_diff_eq!(oracle[0], (4.0f64 / 3.0).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(oracle[3], 4f64.ln(), epsilon = 1e-15);
        for (a, b) in scores.iter().zip(&oracle) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        assert!(scores[3] > scores[0] && scores[3] > scores[1] && scores[3] > scores[2]);
    }

    #[test]
    fn monotone_transform_example() {
        let rows = vec![vec![0.3, 5.0], vec![1.7, -2.0], vec![0.9, 4.0], vec![4.0, 0.0]];
        let moved: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|x| 2.0 * x + 1.0).collect())
            .collect();
        let a = copod_scores(&ScoreMatrix::from_rows(&rows).unwrap()).unwrap();
        let b = copod_scores(&ScoreMatrix::from_rows(&moved).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_single_row() {
        assert!(matches!(
            ScoreMatrix::from_rows(&[vec![1.0, 2.0]]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn dos_scores_examples() {
        let same: Vec<ClientUpdate> = (0..3)
            .map(|i| ClientUpdate::new(i, ParameterVector::new(vec![1.0, 2.0]).unwrap()))
            .collect();
        let r = dos_outlier_scores(&pairwise_distances(&same).unwrap()).unwrap();
        assert!(r.iter().all(|&x| x == 0.0));

        let avg = average_scores(
            &OutlierScores(vec![1.0, 3.0]),
            &OutlierScores(vec![3.0, 1.0]),
        );
        assert_eq!(avg.as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn dos_scores_flag_distant_client() {
        // Four clients in a tight cluster, one at Euclidean distance ~100.
        let pts = [
            vec![1.0, 1.0],
            vec![1.01, 0.99],
            vec![0.99, 1.02],
            vec![1.02, 1.01],
            vec![71.0, 72.0],
        ];
        let updates: Vec<ClientUpdate> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| ClientUpdate::new(i, ParameterVector::new(p.clone()).unwrap()))
            .collect();
        let d = pairwise_distances(&updates).unwrap();
        let r = dos_outlier_scores(&d).unwrap();
        let expected: Vec<f64> = copod_oracle(&d.euclidean.to_rows())
            .iter()
            .zip(copod_oracle(&d.cosine.to_rows()))
            .map(|(e, c)| (e + c) / 2.0)
            .collect();
        for (a, b) in r.iter().zip(&expected) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
        for i in 0..4 {
            assert!(r[4] > r[i], "outlier score {} vs {}", r[4], r[i]);
        }
    }

    fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..9, 1usize..6).prop_flat_map(|(n, d)| {
            proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, d), n)
        })
    }

    proptest! {
        #[test]
        fn right_is_left_of_negation(col in proptest::collection::vec(-5i32..5, 1..20)) {
            let col: Vec<f64> = col.into_iter().map(f64::from).collect();
            let neg: Vec<f64> = col.iter().map(|x| -x).collect();
            prop_assert_eq!(ecdf_right(&col), ecdf_left(&neg));
        }

        #[test]
        fn matches_oracle(rows in matrix_strategy()) {
            let got = copod_scores(&ScoreMatrix::from_rows(&rows).unwrap()).unwrap();
            for (a, b) in got.iter().zip(copod_oracle(&rows)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn bounded_scores(rows in matrix_strategy()) {
            let n = rows.len() as f64;
            let d = rows[0].len() as f64;
            let got = copod_scores(&ScoreMatrix::from_rows(&rows).unwrap()).unwrap();
            for &r in got.iter() {
                prop_assert!(r >= 0.0 && r <= d * n.ln() + 1e-12);
            }
        }

        #[test]
        fn tail_sums_monotone_invariant(rows in matrix_strategy(), scale in 0.01f64..3.0, shift in -5.0f64..5.0) {
            let moved: Vec<Vec<f64>> = rows.iter()
                .map(|r| r.iter().map(|x| (scale * x + shift).exp()).collect())
                .collect();
            // exp can merge distinct values once they round together; only
            // compare when ranks survive.
            let ranks_kept = (0..rows[0].len()).all(|j| {
                let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                let mcol: Vec<f64> = moved.iter().map(|r| r[j]).collect();
                ecdf_left(&col) == ecdf_left(&mcol)
            });
            prop_assume!(ranks_kept);
            // A nonlinear transform may flip a column's skew sign, which moves
            // only the skew-selected sum. Both tail sums are rank functions.
            for (x, y) in tails(&rows).iter().zip(&tails(&moved)) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn affine_invariance(rows in matrix_strategy(), scale in 0.01f64..100.0, shift in -50.0f64..50.0) {
            let moved: Vec<Vec<f64>> = rows.iter()
                .map(|r| r.iter().map(|x| scale * x + shift).collect())
                .collect();
            let ranks_kept = (0..rows[0].len()).all(|j| {
                let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                let mcol: Vec<f64> = moved.iter().map(|r| r[j]).collect();
                ecdf_left(&col) == ecdf_left(&mcol) && skew_sign(&col) == skew_sign(&mcol)
            });
            prop_assume!(ranks_kept);
            let a = copod_scores(&ScoreMatrix::from_rows(&rows).unwrap()).unwrap();
            let b = copod_scores(&ScoreMatrix::from_rows(&moved).unwrap()).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn row_permutation_equivariance(rows in matrix_strategy(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut perm: Vec<usize> = (0..rows.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
            let a = copod_scores(&ScoreMatrix::from_rows(&rows).unwrap()).unwrap();
            let b = copod_scores(&ScoreMatrix::from_rows(&permuted).unwrap()).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                prop_assert!((b[k] - a[i]).abs() < 1e-12);
            }
        }
    }

    /// Left and right tail sums per row, concatenated.
    fn tails(rows: &[Vec<f64>]) -> Vec<f64> {
        let n = rows.len();
        let d = rows[0].len();
        let mut out = vec![0.0; 2 * n];
        for j in 0..d {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            for (i, (u, v)) in ecdf_left(&col).iter().zip(ecdf_right(&col)).enumerate() {
                out[i] -= u.ln();
                out[n + i] -= v.ln();
            }
        }
        out
    }
}
