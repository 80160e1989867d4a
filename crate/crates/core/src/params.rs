//! Flat parameter vectors, pairwise distance matrices and softmax weighting.
//!
//! These are the numerical building blocks of the distance-based outlier
//! suppression rule: every client update is a flat `f64` vector, the server
//! compares updates through Euclidean and cosine distances, and the final
//! model is a convex combination of the updates.

use std::collections::BTreeSet;
use std::ops::Deref;

use crate::error::{Error, Result};

/// Tolerance on `Σ wᵢ = 1` accepted by [`WeightVector`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// A flat model parameter vector. Always non-empty with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("parameter vector must have at least one entry"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "parameter entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Deref for ParameterVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ParameterVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// The vector one client transmits to the server in a round.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client_id: usize,
    pub params: ParameterVector,
}

impl ClientUpdate {
    pub fn new(client_id: usize, params: ParameterVector) -> Self {
        Self { client_id, params }
    }
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }
}

/// Euclidean (`M_E`) and cosine (`M_C`) distance matrices over one round's
/// updates, rows and columns in ascending `client_id` order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistancePair {
    pub client_ids: Vec<usize>,
    pub euclidean: Matrix,
    pub cosine: Matrix,
}

/// Normalized aggregation weights: entries in `[0, 1]` summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::config("weight vector must not be empty"));
        }
        if weights
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0 || *w > 1.0)
        {
            return Err(Error::config("weights must lie in [0, 1]"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::config(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("weight vector must not be empty"));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn one_hot(n: usize, index: usize) -> Result<Self> {
        let mut w = vec![0.0; n];
        *w.get_mut(index)
            .ok_or_else(|| Error::config("one-hot index out of range"))? = 1.0;
        Self::new(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_same_dim(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

/// `‖a − b‖₂`
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_same_dim(a, b)?;
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// `1 − aᵀb / (‖a‖‖b‖)`, clamped to `[0, 2]`.
///
/// A zero-norm argument has no direction; it is treated as orthogonal to
/// everything and yields `1.0`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_same_dim(a, b)?;
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(1.0);
    }
    // sqrt(na * nb) keeps identical vectors at exactly zero distance.
    let mut denom = (na * nb).sqrt();
    if !denom.is_finite() || denom == 0.0 {
        denom = na.sqrt() * nb.sqrt();
    }
    let cos = dot / denom;
    Ok((1.0 - cos).clamp(0.0, 2.0))
}

/// Sorts updates by `client_id`, rejecting duplicates and ragged dimensions.
pub(crate) fn sorted_updates(updates: &[ClientUpdate]) -> Result<Vec<&ClientUpdate>> {
    let mut sorted: Vec<&ClientUpdate> = updates.iter().collect();
    sorted.sort_by_key(|u| u.client_id);
    let mut seen = BTreeSet::new();
    for u in &sorted {
        if !seen.insert(u.client_id) {
            return Err(Error::config(format!(
                "duplicate client_id {} in update set",
                u.client_id
            )));
        }
    }
    if let Some(first) = sorted.first() {
        let dim = first.params.dim();
        for u in &sorted {
            if u.params.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: u.params.dim(),
                });
            }
        }
    }
    Ok(sorted)
}

/// Builds the Euclidean and cosine distance matrices for a round.
pub fn pairwise_distances(updates: &[ClientUpdate]) -> Result<DistancePair> {
    if updates.len() < 2 {
        return Err(Error::config(format!(
            "pairwise distances need at least 2 updates, got {}",
            updates.len()
        )));
    }
    let sorted = sorted_updates(updates)?;
    let n = sorted.len();
    let mut euclidean = Matrix::zeros(n, n);
    let mut cosine = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (sorted[i].params.as_slice(), sorted[j].params.as_slice());
            let de = euclidean_distance(a, b)?;
            let dc = cosine_distance(a, b)?;
            euclidean.set(i, j, de);
            euclidean.set(j, i, de);
            cosine.set(i, j, dc);
            cosine.set(j, i, dc);
        }
    }
    Ok(DistancePair {
        client_ids: sorted.iter().map(|u| u.client_id).collect(),
        euclidean,
        cosine,
    })
}

/// `wᵢ = exp(−rᵢ) / Σⱼ exp(−rⱼ)`, evaluated after shifting by the smallest
/// score so the largest exponent is exactly zero.
pub fn softmax_weights(scores: &[f64]) -> Result<WeightVector> {
    if scores.is_empty() {
        return Err(Error::config("softmax needs at least one score"));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Numeric(format!("outlier score {s} is not finite")));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let exps: Vec<f64> = scores.iter().map(|r| (-(r - min)).exp()).collect();
    let total: f64 = exps.iter().sum();
    WeightVector::new(exps.into_iter().map(|e| e / total).collect())
}

/// `Σᵢ wᵢ θᵢ`, with `weights[k]` applying to `updates[k]`.
///
/// Each coordinate is clamped into the `[min, max]` range of the inputs:
/// rounding can push a convex combination just outside the hull.
pub fn weighted_average(updates: &[ClientUpdate], weights: &WeightVector) -> Result<ParameterVector> {
    if updates.len() != weights.len() {
        return Err(Error::Dimension {
            expected: updates.len(),
            actual: weights.len(),
        });
    }
    let dim = updates
        .first()
        .ok_or_else(|| Error::config("weighted average of zero updates"))?
        .params
        .dim();
    let mut out = vec![0.0; dim];
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for (u, &w) in updates.iter().zip(weights.iter()) {
        check_same_dim(&out, &u.params)?;
        for (k, &v) in u.params.iter().enumerate() {
            out[k] += w * v;
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    for k in 0..dim {
        out[k] = out[k].clamp(lo[k], hi[k]);
    }
    ParameterVector::new(out)
}
