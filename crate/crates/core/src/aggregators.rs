//! Server-side aggregation rules.
//!
//! Five rules share the [`AggregationRule`] interface: distance-based outlier
//! suppression (DOS), FedAvg, coordinate-wise median, trimmed mean and Krum.
//! All of them order clients by ascending `client_id`, so results do not
//! depend on the order in which updates arrive.

use std::fmt;
use std::str::FromStr;

use crate::copod::{dos_outlier_scores, OutlierScores};
use crate::error::{Error, Result};
use crate::params::{
    pairwise_distances, softmax_weights, sorted_updates, weighted_average, ClientUpdate,
    ParameterVector, WeightVector, WEIGHT_SUM_TOLERANCE,
};

pub const DEFAULT_TRIM_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregatorKind {
    Dos,
    FedAvg,
    Median,
    TrimmedMean,
    Krum,
}

impl AggregatorKind {
    pub const ALL: [AggregatorKind; 5] = [
        AggregatorKind::FedAvg,
        AggregatorKind::Median,
        AggregatorKind::TrimmedMean,
        AggregatorKind::Krum,
        AggregatorKind::Dos,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregatorKind::Dos => "dos",
            AggregatorKind::FedAvg => "fedavg",
            AggregatorKind::Median => "median",
            AggregatorKind::TrimmedMean => "trimmed_mean",
            AggregatorKind::Krum => "krum",
        }
    }
}

impl fmt::Display for AggregatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AggregatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = AggregatorKind::ALL.iter().map(|k| k.name()).collect();
                Error::config(format!(
                    "unknown aggregator `{s}` (valid: {})",
                    valid.join(", ")
                ))
            })
    }
}

/// A rule plus its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatorSpec {
    pub kind: AggregatorKind,
    /// Fraction trimmed from each end, trimmed mean only.
    pub trim_fraction: f64,
    /// Assumed byzantine count for Krum; `None` picks [`default_krum_f`].
    pub krum_f: Option<usize>,
}

impl AggregatorSpec {
    pub fn new(kind: AggregatorKind) -> Self {
        Self {
            kind,
            trim_fraction: DEFAULT_TRIM_FRACTION,
            krum_f: None,
        }
    }

    pub fn trimmed_mean(trim_fraction: f64) -> Self {
        Self {
            trim_fraction,
            ..Self::new(AggregatorKind::TrimmedMean)
        }
    }

    pub fn krum(f: Option<usize>) -> Self {
        Self {
            krum_f: f,
            ..Self::new(AggregatorKind::Krum)
        }
    }

    /// Checks the rule's hyperparameters against a round of `n` clients.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.kind {
            AggregatorKind::TrimmedMean => trim_count(self.trim_fraction, n).map(|_| ()),
            AggregatorKind::Krum => krum_neighbours(n, self.effective_krum_f(n)).map(|_| ()),
            AggregatorKind::Dos => {
                if n < 2 {
                    return Err(Error::config("DOS needs at least 2 clients"));
                }
                Ok(())
            }
            AggregatorKind::FedAvg | AggregatorKind::Median => {
                if n == 0 {
                    return Err(Error::config("no clients to aggregate"));
                }
                Ok(())
            }
        }
    }

    pub fn effective_krum_f(&self, n: usize) -> usize {
        self.krum_f.unwrap_or_else(|| default_krum_f(n))
    }
}

/// `ceil(0.4 n)`, reduced when needed so that Krum keeps at least one
/// neighbour.
pub fn default_krum_f(n: usize) -> usize {
    let f = (2 * n).div_ceil(5);
    f.min(n.saturating_sub(3))
}

/// Per-client attribution of an aggregation.
#[derive(Debug, Clone, PartialEq)]
pub enum ClientWeights {
    Weights(WeightVector),
    /// Order-statistic rules have no faithful per-client weight.
    Unavailable,
}

impl ClientWeights {
    pub fn get(&self, index: usize) -> Option<f64> {
        match self {
            ClientWeights::Weights(w) => w.get(index).copied(),
            ClientWeights::Unavailable => None,
        }
    }

    pub fn as_weights(&self) -> Option<&WeightVector> {
        match self {
            ClientWeights::Weights(w) => Some(w),
            ClientWeights::Unavailable => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationResult {
    /// Client ids in ascending order; `weights` and `scores` follow it.
    pub client_ids: Vec<usize>,
    pub new_global: ParameterVector,
    pub weights: ClientWeights,
    /// DOS outlier scores, absent for the other rules.
    pub scores: Option<OutlierScores>,
    /// The client Krum picked.
    pub selected_client: Option<usize>,
}

impl AggregationResult {
    fn new(client_ids: Vec<usize>, new_global: ParameterVector, weights: ClientWeights) -> Self {
        Self {
            client_ids,
            new_global,
            weights,
            scores: None,
            selected_client: None,
        }
    }

    pub fn weight_of(&self, client_id: usize) -> Option<f64> {
        let pos = self.client_ids.iter().position(|&c| c == client_id)?;
        self.weights.get(pos)
    }
}

pub trait AggregationRule {
    fn name(&self) -> &'static str;

    fn aggregate(&self, updates: &[ClientUpdate]) -> Result<AggregationResult>;
}

impl AggregationRule for AggregatorSpec {
    fn name(&self) -> &'static str {
        self.kind.name()
    }

    fn aggregate(&self, updates: &[ClientUpdate]) -> Result<AggregationResult> {
        match self.kind {
            AggregatorKind::Dos => aggregate_dos(updates),
            AggregatorKind::FedAvg => aggregate_fedavg(updates, None),
            AggregatorKind::Median => aggregate_median(updates),
            AggregatorKind::TrimmedMean => aggregate_trimmed_mean(updates, self.trim_fraction),
            AggregatorKind::Krum => {
                aggregate_krum(updates, self.effective_krum_f(updates.len()))
            }
        }
    }
}

fn owned_sorted(updates: &[ClientUpdate]) -> Result<Vec<ClientUpdate>> {
    if updates.is_empty() {
        return Err(Error::config("no updates to aggregate"));
    }
    Ok(sorted_updates(updates)?.into_iter().cloned().collect())
}

fn ids(updates: &[ClientUpdate]) -> Vec<usize> {
    updates.iter().map(|u| u.client_id).collect()
}

/// Distance-based outlier suppression.
pub fn aggregate_dos(updates: &[ClientUpdate]) -> Result<AggregationResult> {
    let sorted = owned_sorted(updates)?;
    let distances = pairwise_distances(&sorted)?;
    let scores = dos_outlier_scores(&distances)?;
    let weights = softmax_weights(&scores)?;
    let new_global = weighted_average(&sorted, &weights)?;
    Ok(AggregationResult {
        scores: Some(scores),
        ..AggregationResult::new(ids(&sorted), new_global, ClientWeights::Weights(weights))
    })
}

/// Weighted mean with fixed weights, uniform by default. `alphas` follow
/// ascending `client_id` order.
pub fn aggregate_fedavg(updates: &[ClientUpdate], alphas: Option<&[f64]>) -> Result<AggregationResult> {
    let sorted = owned_sorted(updates)?;
    let n = sorted.len();
    let weights = match alphas {
        None => WeightVector::uniform(n)?,
        Some(a) => {
            if a.len() != n {
                return Err(Error::config(format!(
                    "expected {n} FedAvg weights, got {}",
                    a.len()
                )));
            }
            if a.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::config("FedAvg weights must be nonnegative"));
            }
            let sum: f64 = a.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(Error::config(format!("FedAvg weights sum to {sum}, expected 1")));
            }
            WeightVector::new(a.to_vec())?
        }
    };
    let new_global = weighted_average(&sorted, &weights)?;
    Ok(AggregationResult::new(
        ids(&sorted),
        new_global,
        ClientWeights::Weights(weights),
    ))
}

/// Applies `f` to every coordinate's values sorted ascending.
fn per_coordinate(sorted: &[ClientUpdate], f: impl Fn(&[f64]) -> f64) -> Result<ParameterVector> {
    let dim = sorted[0].params.dim();
    let mut column = Vec::with_capacity(sorted.len());
    let mut out = Vec::with_capacity(dim);
    for k in 0..dim {
        column.clear();
        column.extend(sorted.iter().map(|u| u.params[k]));
        column.sort_by(f64::total_cmp);
        out.push(f(&column));
    }
    ParameterVector::new(out)
}

pub fn aggregate_median(updates: &[ClientUpdate]) -> Result<AggregationResult> {
    let sorted = owned_sorted(updates)?;
    let new_global = per_coordinate(&sorted, |v| {
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            v[n / 2 - 1] + (v[n / 2] - v[n / 2 - 1]) / 2.0
        }
    })?;
    Ok(AggregationResult::new(ids(&sorted), new_global, ClientWeights::Unavailable))
}

fn trim_count(trim_fraction: f64, n: usize) -> Result<usize> {
    if !(0.0..0.5).contains(&trim_fraction) {
        return Err(Error::config(format!(
            "trim_fraction must lie in [0, 0.5), got {trim_fraction}"
        )));
    }
    let k = (trim_fraction * n as f64).floor() as usize;
    if n <= 2 * k {
        return Err(Error::config(format!(
            "trimming {k} values from each end of {n} leaves nothing to average"
        )));
    }
    Ok(k)
}

pub fn aggregate_trimmed_mean(updates: &[ClientUpdate], trim_fraction: f64) -> Result<AggregationResult> {
    let sorted = owned_sorted(updates)?;
    let k = trim_count(trim_fraction, sorted.len())?;
    let new_global = per_coordinate(&sorted, |v| {
        let kept = &v[k..v.len() - k];
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        mean.clamp(kept[0], kept[kept.len() - 1])
    })?;
    Ok(AggregationResult::new(ids(&sorted), new_global, ClientWeights::Unavailable))
}

fn krum_neighbours(n: usize, f: usize) -> Result<usize> {
    match n.checked_sub(f + 2) {
        Some(m) if m >= 1 => Ok(m),
        _ => Err(Error::config(format!(
            "Krum needs n - f - 2 >= 1 (n = {n}, f = {f})"
        ))),
    }
}

/// Krum: the update with the smallest sum of squared distances to its
/// `n − f − 2` nearest neighbours. Ties go to the lowest `client_id`.
pub fn aggregate_krum(updates: &[ClientUpdate], f: usize) -> Result<AggregationResult> {
    let sorted = owned_sorted(updates)?;
    let n = sorted.len();
    let m = krum_neighbours(n, f)?;
    let mut sq = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = sorted[i]
                .params
                .iter()
                .zip(sorted[j].params.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sq[i][j] = d;
            sq[j][i] = d;
        }
    }
    let mut best = 0;
    let mut best_score = f64::INFINITY;
    for (i, row) in sq.iter().enumerate() {
        let mut others: Vec<f64> = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &d)| d)
            .collect();
        others.sort_by(f64::total_cmp);
        let score: f64 = others[..m].iter().sum();
        if score < best_score {
            best_score = score;
            best = i;
        }
    }
    let selected = sorted[best].client_id;
    Ok(AggregationResult {
        selected_client: Some(selected),
        ..AggregationResult::new(
            ids(&sorted),
            sorted[best].params.clone(),
            ClientWeights::Weights(WeightVector::one_hot(n, best)?),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, SeedableRng};

    fn ups(rows: &[&[f64]]) -> Vec<ClientUpdate> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| ClientUpdate::new(i, ParameterVector::new(r.to_vec()).unwrap()))
            .collect()
    }

    fn scalar(values: &[f64]) -> Vec<ClientUpdate> {
        let rows: Vec<Vec<f64>> = values.iter().map(|v| vec![*v]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        ups(&refs)
    }

    #[test]
    fn kind_names_round_trip() {
        for k in AggregatorKind::ALL {
            assert_eq!(k.name().parse::<AggregatorKind>().unwrap(), k);
        }
        let err = "bulyan".parse::<AggregatorKind>().unwrap_err().to_string();
        assert!(err.contains("trimmed_mean") && err.contains("krum"), "{err}");
    }

    #[test]
    fn dos_identical_updates() {
        let r = aggregate_dos(&scalar(&[2.5, 2.5, 2.5, 2.5])).unwrap();
        assert_eq!(r.new_global.as_slice(), &[2.5]);
        for &w in r.weights.as_weights().unwrap().iter() {
            assert_abs_diff_eq!(w, 0.25, epsilon = 1e-15);
        }
        assert!(r.scores.unwrap().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn dos_suppresses_far_client() {
        let r = aggregate_dos(&scalar(&[1.0, 1.1, 0.9, 1.05, 1000.0])).unwrap();
        let w = r.weights.as_weights().unwrap();
        assert!(w[4] < 0.05, "weight {}", w[4]);
        let g = r.new_global[0];
        assert!((0.9..=1.1 + 0.05 * 999.0).contains(&g), "global {g}");
    }

    #[test]
    fn dos_needs_two_clients() {
        assert!(aggregate_dos(&scalar(&[1.0])).is_err());
    }

    #[test]
    fn fedavg_examples() {
        assert_eq!(aggregate_fedavg(&scalar(&[0.0, 10.0]), None).unwrap().new_global[0], 5.0);
        assert_eq!(
            aggregate_fedavg(&scalar(&[0.0, 10.0]), Some(&[1.0, 0.0])).unwrap().new_global[0],
            0.0
        );
        assert_eq!(
            aggregate_fedavg(&scalar(&[0.0, 10.0]), Some(&[0.25, 0.75])).unwrap().new_global[0],
            7.5
        );
        assert!(aggregate_fedavg(&scalar(&[0.0, 10.0]), Some(&[0.5, 0.6])).is_err());
        assert!(aggregate_fedavg(&scalar(&[0.0, 10.0]), Some(&[1.5, -0.5])).is_err());
        assert!(aggregate_fedavg(&scalar(&[0.0, 10.0]), Some(&[1.0])).is_err());
    }

    #[test]
    fn median_examples() {
        assert_eq!(aggregate_median(&scalar(&[1.0, 2.0, 100.0])).unwrap().new_global[0], 2.0);
        assert_eq!(aggregate_median(&scalar(&[1.0, 3.0])).unwrap().new_global[0], 2.0);
        let r = aggregate_median(&ups(&[&[0.0, 9.0], &[5.0, 0.0], &[9.0, 5.0]])).unwrap();
        assert_eq!(r.new_global.as_slice(), &[5.0, 5.0]);
        assert_eq!(r.weights, ClientWeights::Unavailable);
    }

    #[test]
    fn trimmed_mean_examples() {
        let r = aggregate_trimmed_mean(&scalar(&[1.0, 2.0, 3.0, 4.0, 100.0]), 0.2).unwrap();
        assert_eq!(r.new_global[0], 3.0);
        let r = aggregate_trimmed_mean(&scalar(&[-100.0, 1.0, 2.0, 3.0, 100.0]), 0.2).unwrap();
        assert_eq!(r.new_global[0], 2.0);
        let plain = aggregate_fedavg(&scalar(&[1.0, 2.0, 6.0]), None).unwrap();
        let r = aggregate_trimmed_mean(&scalar(&[1.0, 2.0, 6.0]), 0.0).unwrap();
        assert_abs_diff_eq!(r.new_global[0], plain.new_global[0], epsilon = 1e-12);
        assert!(aggregate_trimmed_mean(&scalar(&[1.0, 2.0]), 0.5).is_err());
        assert!(aggregate_trimmed_mean(&scalar(&[1.0, 2.0]), 0.49).is_ok());
        assert!(AggregatorSpec::trimmed_mean(0.4).validate(10).is_ok());
    }

    #[test]
    fn krum_examples() {
        let r = aggregate_krum(&scalar(&[0.0, 0.1, 0.2, 10.0]), 1).unwrap();
        assert_eq!(r.selected_client, Some(0));
        assert_eq!(r.new_global[0], 0.0);
        assert_eq!(r.weights.as_weights().unwrap().as_slice(), &[1.0, 0.0, 0.0, 0.0]);

        let r = aggregate_krum(&scalar(&[0.0, 0.0, 0.0, 0.0, 100.0]), 1).unwrap();
        assert_ne!(r.selected_client, Some(4));
        assert_eq!(r.new_global[0], 0.0);

        let r = aggregate_krum(&scalar(&[3.0, 3.0, 3.0]), 0).unwrap();
        assert_eq!(r.new_global[0], 3.0);

        assert!(matches!(
            aggregate_krum(&scalar(&[0.0, 1.0, 2.0]), 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn krum_default_f() {
        assert_eq!(default_krum_f(10), 4);
        assert_eq!(default_krum_f(5), 2);
        assert_eq!(default_krum_f(4), 1);
        assert!(AggregatorSpec::krum(None).validate(10).is_ok());
        assert!(AggregatorSpec::krum(None).validate(2).is_err());
        assert!(AggregatorSpec::krum(Some(8)).validate(10).is_err());
    }

    #[test]
    fn median_breakdown_sanity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        use rand::Rng;
        for _ in 0..50 {
            let honest: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let mut all = honest.clone();
            for _ in 0..4 {
                all.push((0..3).map(|_| rng.random_range(-1e6..1e6)).collect());
            }
            let refs: Vec<&[f64]> = all.iter().map(Vec::as_slice).collect();
            let r = aggregate_median(&ups(&refs)).unwrap();
            for k in 0..3 {
                let lo = honest.iter().map(|h| h[k]).fold(f64::INFINITY, f64::min);
                let hi = honest.iter().map(|h| h[k]).fold(f64::NEG_INFINITY, f64::max);
                assert!((lo..=hi).contains(&r.new_global[k]));
            }
        }
    }

    #[test]
    fn dos_suppresses_one_distant_client() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        use rand::Rng;
        for _ in 0..200 {
            let cluster = rng.random_range(3..10);
            let d = rng.random_range(2..6);
            let mut rows: Vec<Vec<f64>> = (0..cluster)
                .map(|_| (0..d).map(|_| 1.0 + rng.random_range(-1e-3..1e-3)).collect())
                .collect();
            rows.push((0..d).map(|_| rng.random_range(-50.0..50.0)).collect());
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            let r = aggregate_dos(&ups(&refs)).unwrap();
            let w = r.weights.as_weights().unwrap();
            let min_in = w[..cluster].iter().copied().fold(1.0, f64::min);
            assert!(w[cluster] < min_in, "outlier {} vs cluster {min_in}", w[cluster]);
        }
    }

    /// Several scattered outliers are not always suppressed below every
    /// cluster member: tight-cluster clients collect large left-tail terms
    /// from their own near-zero distances.
    #[test]
    fn scattered_outliers_can_outweigh_a_cluster_member() {
        let rows: [&[f64]; 10] = [
            &[1.0, 1.0],
            &[1.001, 1.0],
            &[1.0, 1.001],
            &[0.999, 1.0],
            &[1.0, 0.999],
            &[1.001, 1.001],
            &[-30.0, -30.0],
            &[-20.0, 20.0],
            &[0.0, 30.0],
            &[-30.0, 40.0],
        ];
        let r = aggregate_dos(&ups(&rows)).unwrap();
        let w = r.weights.as_weights().unwrap();
        assert!(w[8] > w[2]);
        // The cluster still carries most of the mass.
        assert!(w[..6].iter().sum::<f64>() > 0.9);
    }

    fn krum_has_tie(rows: &[Vec<f64>], f: usize) -> bool {
        let m = rows.len() - f - 2;
        let mut scores: Vec<f64> = rows
            .iter()
            .map(|a| {
                let mut d: Vec<f64> = rows
                    .iter()
                    .filter(|b| !std::ptr::eq(a, *b))
                    .map(|b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum())
                    .collect();
                d.sort_by(f64::total_cmp);
                d[..m].iter().sum()
            })
            .collect();
        scores.sort_by(f64::total_cmp);
        scores[0] == scores[1]
    }

    fn instance() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (3usize..8, 1usize..4).prop_flat_map(|(n, d)| {
            proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, d), n)
        })
    }

    proptest! {
        #[test]
        fn hull_containment(rows in instance(), tf in 0.0f64..0.34) {
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            let u = ups(&refs);
            let d = rows[0].len();
            for spec in [
                AggregatorSpec::new(AggregatorKind::Dos),
                AggregatorSpec::new(AggregatorKind::FedAvg),
                AggregatorSpec::new(AggregatorKind::Median),
                AggregatorSpec::trimmed_mean(tf),
            ] {
                let g = spec.aggregate(&u).unwrap().new_global;
                for k in 0..d {
                    let lo = rows.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
                    let hi = rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(g[k] >= lo && g[k] <= hi, "{} coordinate {}", spec.name(), k);
                }
            }
        }

        #[test]
        fn krum_returns_an_input(rows in instance()) {
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            let u = ups(&refs);
            let r = aggregate_krum(&u, rows.len() - 3).unwrap();
            prop_assert!(rows.iter().any(|row| row.as_slice() == r.new_global.as_slice()));
        }

        #[test]
        fn permutation_equivariance(rows in instance(), seed in any::<u64>()) {
            let n = rows.len();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            let base_updates = ups(&refs);
            // Relabel: the update originally held by client i now belongs to perm[i].
            let relabelled: Vec<ClientUpdate> = base_updates
                .iter()
                .map(|u| ClientUpdate::new(perm[u.client_id], u.params.clone()))
                .collect();
            for spec in [
                AggregatorSpec::new(AggregatorKind::Dos),
                AggregatorSpec::new(AggregatorKind::FedAvg),
                AggregatorSpec::new(AggregatorKind::Median),
                AggregatorSpec::trimmed_mean(0.2),
                AggregatorSpec::krum(Some(n - 3)),
            ] {
                let a = spec.aggregate(&base_updates).unwrap();
                let b = spec.aggregate(&relabelled).unwrap();
                if spec.kind == AggregatorKind::Krum && krum_has_tie(&rows, n - 3) {
                    // The id tie-break legitimately depends on labels.
                    continue;
                }
                for (x, y) in a.new_global.iter().zip(b.new_global.iter()) {
                    prop_assert!((x - y).abs() < 1e-9, "{}", spec.name());
                }
                if spec.kind != AggregatorKind::Krum {
                    for i in 0..n {
                        match (a.weight_of(i), b.weight_of(perm[i])) {
                            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                            (None, None) => {}
                            _ => prop_assert!(false, "weights availability differs"),
                        }
                    }
                }
            }
        }
    }
}
