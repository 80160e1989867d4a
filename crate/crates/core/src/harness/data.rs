//! Synthetic labelled data and client partitioning.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

const LABEL_SKEW_RETRIES: usize = 100;

/// Row-major `m × q` features with labels in `[0, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    input_dim: usize,
    class_count: usize,
}

impl LabeledDataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, input_dim: usize, class_count: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::config("dataset must contain at least one sample"));
        }
        if input_dim == 0 || features.len() != labels.len() * input_dim {
            return Err(Error::Dimension {
                expected: labels.len() * input_dim,
                actual: features.len(),
            });
        }
        if let Some(l) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::config(format!(
                "label {l} outside class range 0..{class_count}"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("dataset features must be finite".into()));
        }
        Ok(Self {
            features,
            labels,
            input_dim,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.features[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Copy of the rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.input_dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.sample(i));
            labels.push(self.labels[i]);
        }
        Self::new(features, labels, self.input_dim, self.class_count)
    }

    /// Same features, new labels.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.labels.len() {
            return Err(Error::Dimension {
                expected: self.labels.len(),
                actual: labels.len(),
            });
        }
        Self::new(self.features.clone(), labels, self.input_dim, self.class_count)
    }
}

/// Parameters of the Gaussian-cluster generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub class_count: usize,
    pub input_dim: usize,
    pub samples_per_class: usize,
    /// Radius of the sphere the class means are drawn on.
    pub class_separation: f64,
}

/// One unit-covariance Gaussian cluster per class, with means drawn
/// uniformly on the sphere of radius `class_separation`. Samples are
/// ordered class by class.
pub fn generate_synthetic<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Result<LabeledDataset> {
    let SyntheticSpec {
        class_count,
        input_dim,
        samples_per_class,
        class_separation,
    } = *spec;
    if class_count < 2 || input_dim == 0 || samples_per_class == 0 {
        return Err(Error::config(
            "synthetic data needs at least 2 classes, 1 input dimension and 1 sample per class",
        ));
    }
    if !(class_separation >= 0.0 && class_separation.is_finite()) {
        return Err(Error::config("class separation must be finite and nonnegative"));
    }
    let means: Vec<Vec<f64>> = (0..class_count)
        .map(|_| {
            let dir: Vec<f64> = (0..input_dim).map(|_| StandardNormal.sample(rng)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            dir.iter().map(|x| x / norm * class_separation).collect()
        })
        .collect();
    let mut features = Vec::with_capacity(class_count * samples_per_class * input_dim);
    let mut labels = Vec::with_capacity(class_count * samples_per_class);
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..samples_per_class {
            for m in mean {
                let z: f64 = StandardNormal.sample(rng);
                features.push(m + z);
            }
            labels.push(c);
        }
    }
    LabeledDataset::new(features, labels, input_dim, class_count)
}

/// Stratified train/test split: `round(test_fraction · count)` samples of
/// every class go to the test set.
pub fn split_holdout<R: Rng + ?Sized>(
    ds: &LabeledDataset,
    test_fraction: f64,
    rng: &mut R,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..ds.class_count() {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.label(i) == c).collect();
        idx.shuffle(rng);
        let k = (test_fraction * idx.len() as f64).round() as usize;
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::config("holdout split left an empty train or test set"));
    }
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

/// Shuffled equal shards; the remainder goes one sample each to the lowest
/// client ids.
pub fn partition_iid<R: Rng + ?Sized>(
    ds: &LabeledDataset,
    n: usize,
    rng: &mut R,
) -> Result<Vec<LabeledDataset>> {
    if n == 0 || ds.len() < n {
        return Err(Error::config(format!(
            "cannot split {} samples across {n} clients",
            ds.len()
        )));
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(rng);
    let base = ds.len() / n;
    let extra = ds.len() % n;
    let mut shards = Vec::with_capacity(n);
    let mut start = 0;
    for client in 0..n {
        let size = base + usize::from(client < extra);
        shards.push(ds.subset(&idx[start..start + size])?);
        start += size;
    }
    Ok(shards)
}

fn dirichlet<R: Rng + ?Sized>(alpha: f64, n: usize, rng: &mut R) -> Result<Option<Vec<f64>>> {
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::config(format!("bad alpha: {e}")))?;
    let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Ok(None);
    }
    Ok(Some(draws.into_iter().map(|g| g / total).collect()))
}

/// Label-skewed non-iid split: each class is spread over clients by its own
/// Dirichlet(alpha) draw. Redraws (up to 100 times) until every client has
/// at least one sample.
pub fn partition_label_skew<R: Rng + ?Sized>(
    ds: &LabeledDataset,
    n: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<Vec<LabeledDataset>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::config(format!("Dirichlet alpha must be positive, got {alpha}")));
    }
    if n == 0 || ds.len() < n {
        return Err(Error::config(format!(
            "cannot split {} samples across {n} clients",
            ds.len()
        )));
    }
    'attempt: for _ in 0..LABEL_SKEW_RETRIES {
        let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); n];
        for c in 0..ds.class_count() {
            let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.label(i) == c).collect();
            if idx.is_empty() {
                continue;
            }
            idx.shuffle(rng);
            let Some(props) = dirichlet(alpha, n, rng)? else {
                continue 'attempt;
            };
            let count = idx.len() as f64;
            let mut cumulative = 0.0;
            let mut start = 0;
            for (client, p) in props.iter().enumerate() {
                cumulative += p;
                let end = if client + 1 == n {
                    idx.len()
                } else {
                    ((cumulative * count).round() as usize).clamp(start, idx.len())
                };
                assigned[client].extend_from_slice(&idx[start..end]);
                start = end;
            }
        }
        if assigned.iter().all(|a| !a.is_empty()) {
            return assigned.iter().map(|a| ds.subset(a)).collect();
        }
    }
    Err(Error::config(format!(
        "label-skew partition left a client empty after {LABEL_SKEW_RETRIES} attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use rand::SeedableRng;

    fn rng(seed: u64) -> SimRng {
        SimRng::seed_from_u64(seed)
    }

    fn spec(c: usize, q: usize, spc: usize, sep: f64) -> SyntheticSpec {
        SyntheticSpec {
            class_count: c,
            input_dim: q,
            samples_per_class: spc,
            class_separation: sep,
        }
    }

    /// Sorted `(label, feature bits)` rows: a dataset as a multiset.
    fn multiset(shards: &[LabeledDataset]) -> Vec<(usize, Vec<u64>)> {
        let mut rows: Vec<(usize, Vec<u64>)> = shards
            .iter()
            .flat_map(|s| {
                (0..s.len()).map(move |i| (s.label(i), s.sample(i).iter().map(|v| v.to_bits()).collect()))
            })
            .collect();
        rows.sort();
        rows
    }

    #[test]
    fn dataset_validation() {
        assert!(LabeledDataset::new(vec![], vec![], 2, 2).is_err());
        assert!(LabeledDataset::new(vec![1.0, 2.0], vec![2], 2, 2).is_err());
        assert!(LabeledDataset::new(vec![1.0], vec![0], 2, 2).is_err());
        assert!(LabeledDataset::new(vec![1.0, f64::NAN], vec![0], 2, 2).is_err());
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = generate_synthetic(&spec(3, 5, 20, 4.0), &mut rng(1)).unwrap();
        let b = generate_synthetic(&spec(3, 5, 20, 4.0), &mut rng(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 60);
        assert_eq!(a.class_counts(), vec![20, 20, 20]);
        assert!(generate_synthetic(&spec(1, 5, 20, 4.0), &mut rng(1)).is_err());
    }

    #[test]
    fn iid_partition_sizes() {
        let ds = generate_synthetic(&spec(2, 3, 50, 1.0), &mut rng(2)).unwrap();
        let shards = partition_iid(&ds, 10, &mut rng(3)).unwrap();
        assert!(shards.iter().all(|s| s.len() == 10));

        let ds101 = ds.subset(&(0..100).chain([0]).collect::<Vec<_>>()).unwrap();
        let shards = partition_iid(&ds101, 10, &mut rng(3)).unwrap();
        let sizes: Vec<usize> = shards.iter().map(LabeledDataset::len).collect();
        assert_eq!(sizes, vec![11, 10, 10, 10, 10, 10, 10, 10, 10, 10]);
        assert_eq!(multiset(&shards), multiset(&[ds101]));

        let tiny = ds.subset(&[0, 1, 2]).unwrap();
        assert!(partition_iid(&tiny, 4, &mut rng(3)).is_err());
    }

    #[test]
    fn label_skew_large_alpha_matches_global_mix() {
        let ds = generate_synthetic(&spec(4, 2, 2000, 1.0), &mut rng(4)).unwrap();
        let shards = partition_label_skew(&ds, 5, 1e6, &mut rng(5)).unwrap();
        for s in &shards {
            for count in s.class_counts() {
                let share = count as f64 / s.len() as f64;
                assert!((share - 0.25).abs() < 0.05, "share {share}");
            }
        }
        assert_eq!(multiset(&shards), multiset(&[ds]));
    }

    #[test]
    fn label_skew_small_alpha_is_skewed() {
        let ds = generate_synthetic(&spec(7, 2, 60, 1.0), &mut rng(6)).unwrap();
        for seed in 0..20 {
            let shards = partition_label_skew(&ds, 10, 0.1, &mut rng(seed)).unwrap();
            assert!(shards.iter().all(|s| !s.is_empty()));
            let dominated = shards.iter().any(|s| {
                let top = *s.class_counts().iter().max().unwrap();
                top as f64 > 0.5 * s.len() as f64
            });
            assert!(dominated, "seed {seed}");
            assert_eq!(multiset(&shards), multiset(std::slice::from_ref(&ds)));
        }
        assert!(partition_label_skew(&ds, 10, 0.0, &mut rng(0)).is_err());
    }

    #[test]
    fn holdout_is_stratified() {
        let ds = generate_synthetic(&spec(4, 3, 200, 6.0), &mut rng(7)).unwrap();
        let (train, test) = split_holdout(&ds, 0.2, &mut rng(8)).unwrap();
        assert_eq!(test.class_counts(), vec![40; 4]);
        assert_eq!(train.class_counts(), vec![160; 4]);
        assert_eq!(multiset(&[train, test]), multiset(&[ds]));
    }
}
