//! Small softmax classifiers over flat parameter vectors, trained with
//! mini-batch SGD on cross-entropy.
//!
//! Parameter layout, row-major:
//! - logistic: `W [C × q]`, `b [C]`
//! - mlp1: `W1 [H × q]`, `b1 [H]`, `W2 [C × H]`, `b2 [C]`

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::harness::data::LabeledDataset;
use crate::params::ParameterVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Logistic,
    Mlp1,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Mlp1 => "mlp1",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(ModelKind::Logistic),
            "mlp1" => Ok(ModelKind::Mlp1),
            other => Err(Error::config(format!(
                "unknown model kind `{other}` (valid: logistic, mlp1)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    /// Hidden width, used by `mlp1` only.
    pub hidden_dim: usize,
    pub class_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Local epochs per round.
    pub local_steps: usize,
    pub batch_size: usize,
    pub rounds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            local_steps: 1,
            batch_size: 16,
            rounds: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be finite and nonnegative"));
        }
        if self.local_steps == 0 || self.batch_size == 0 {
            return Err(Error::config("local_steps and batch_size must be at least 1"));
        }
        Ok(())
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl ModelSpec {
    pub fn logistic(input_dim: usize, class_count: usize) -> Self {
        Self {
            kind: ModelKind::Logistic,
            input_dim,
            hidden_dim: 0,
            class_count,
        }
    }

    pub fn mlp1(input_dim: usize, hidden_dim: usize, class_count: usize) -> Self {
        Self {
            kind: ModelKind::Mlp1,
            input_dim,
            hidden_dim,
            class_count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.class_count < 2 {
            return Err(Error::config("model needs input_dim >= 1 and at least 2 classes"));
        }
        if self.kind == ModelKind::Mlp1 && self.hidden_dim == 0 {
            return Err(Error::config("mlp1 needs hidden_dim >= 1"));
        }
        Ok(())
    }

    /// Parameter count `d`.
    pub fn param_count(&self) -> usize {
        let (q, h, c) = (self.input_dim, self.hidden_dim, self.class_count);
        match self.kind {
            ModelKind::Logistic => c * q + c,
            ModelKind::Mlp1 => h * q + h + c * h + c,
        }
    }

    /// `(fan_in, size)` of each weight/bias block in layout order.
    fn blocks(&self) -> Vec<(usize, usize)> {
        let (q, h, c) = (self.input_dim, self.hidden_dim, self.class_count);
        match self.kind {
            ModelKind::Logistic => vec![(q, c * q), (q, c)],
            ModelKind::Mlp1 => vec![(q, h * q), (q, h), (h, c * h), (h, c)],
        }
    }

    /// Uniform in `±1/√fan_in`, layer by layer.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ParameterVector> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.param_count());
        for (fan_in, size) in self.blocks() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            out.extend((0..size).map(|_| rng.random_range(-bound..bound)));
        }
        ParameterVector::new(out)
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Dimension {
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        Ok(())
    }

    fn check_data(&self, data: &LabeledDataset) -> Result<()> {
        if data.input_dim() != self.input_dim || data.class_count() != self.class_count {
            return Err(Error::Dimension {
                expected: self.input_dim,
                actual: data.input_dim(),
            });
        }
        Ok(())
    }

    /// Logits for one sample, plus the hidden activations for `mlp1`.
    fn forward(&self, params: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (q, h, c) = (self.input_dim, self.hidden_dim, self.class_count);
        let affine = |w: &[f64], b: &[f64], input: &[f64], rows: usize| -> Vec<f64> {
            let cols = input.len();
            (0..rows)
                .map(|r| {
                    b[r] + w[r * cols..(r + 1) * cols]
                        .iter()
                        .zip(input)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                })
                .collect()
        };
        match self.kind {
            ModelKind::Logistic => {
                let (w, b) = params.split_at(c * q);
                (affine(w, b, x, c), Vec::new())
            }
            ModelKind::Mlp1 => {
                let (w1, rest) = params.split_at(h * q);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(c * h);
                let hidden: Vec<f64> = affine(w1, b1, x, h).into_iter().map(|z| z.max(0.0)).collect();
                (affine(w2, b2, &hidden, c), hidden)
            }
        }
    }

    pub fn probabilities(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let (mut z, _) = self.forward(params, x);
        softmax_in_place(&mut z);
        z
    }

    /// Mean cross-entropy over `indices`.
    pub fn loss(&self, params: &[f64], data: &LabeledDataset, indices: &[usize]) -> Result<f64> {
        self.check_params(params)?;
        self.check_data(data)?;
        let total: f64 = indices
            .iter()
            .map(|&i| {
                let (z, _) = self.forward(params, data.sample(i));
                log_sum_exp(&z) - z[data.label(i)]
            })
            .sum();
        Ok(total / indices.len().max(1) as f64)
    }

    /// Mean cross-entropy over `indices` and its gradient.
    pub fn loss_and_grad(
        &self,
        params: &[f64],
        data: &LabeledDataset,
        indices: &[usize],
    ) -> Result<(f64, Vec<f64>)> {
        self.check_params(params)?;
        self.check_data(data)?;
        let (q, h, c) = (self.input_dim, self.hidden_dim, self.class_count);
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        for &i in indices {
            let x = data.sample(i);
            let y = data.label(i);
            let (z, hidden) = self.forward(params, x);
            loss += log_sum_exp(&z) - z[y];
            let mut dz = z;
            softmax_in_place(&mut dz);
            dz[y] -= 1.0;
            match self.kind {
                ModelKind::Logistic => {
                    let (gw, gb) = grad.split_at_mut(c * q);
                    for (k, &d) in dz.iter().enumerate() {
                        for (g, &xv) in gw[k * q..(k + 1) * q].iter_mut().zip(x) {
                            *g += d * xv;
                        }
                        gb[k] += d;
                    }
                }
                ModelKind::Mlp1 => {
                    let w2 = &params[h * q + h..h * q + h + c * h];
                    let (gw1, rest) = grad.split_at_mut(h * q);
                    let (gb1, rest) = rest.split_at_mut(h);
                    let (gw2, gb2) = rest.split_at_mut(c * h);
                    let mut dhidden = vec![0.0; h];
                    for (k, &d) in dz.iter().enumerate() {
                        for j in 0..h {
                            gw2[k * h + j] += d * hidden[j];
                            dhidden[j] += d * w2[k * h + j];
                        }
                        gb2[k] += d;
                    }
                    for j in 0..h {
                        if hidden[j] <= 0.0 {
                            continue;
                        }
                        let d = dhidden[j];
                        for (g, &xv) in gw1[j * q..(j + 1) * q].iter_mut().zip(x) {
                            *g += d * xv;
                        }
                        gb1[j] += d;
                    }
                }
            }
        }
        let scale = 1.0 / indices.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok((loss * scale, grad))
    }
}

/// `local_steps` epochs of shuffled mini-batch SGD starting from `params`.
pub fn local_train<R: Rng + ?Sized>(
    model: &ModelSpec,
    params: &ParameterVector,
    data: &LabeledDataset,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<ParameterVector> {
    model.check_params(params)?;
    model.check_data(data)?;
    cfg.validate()?;
    let mut theta = params.as_slice().to_vec();
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..cfg.local_steps {
        order.shuffle(rng);
        for batch in order.chunks(cfg.batch_size) {
            let (_, grad) = model.loss_and_grad(&theta, data, batch)?;
            for (t, g) in theta.iter_mut().zip(&grad) {
                *t -= cfg.learning_rate * g;
            }
        }
    }
    ParameterVector::new(theta)
}
