//! Byzantine client behaviour.
//!
//! An [`AttackPlan`] maps client ids to an [`AttackKind`]. Label flipping
//! poisons a client's training data before the run; every other kind
//! rewrites the vector the client transmits after local training.
//! Assignments stay fixed for the whole run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::aggregators::AggregationRule;
use crate::error::{Error, Result};
use crate::harness::data::LabeledDataset;
use crate::kv;
use crate::params::{ClientUpdate, ParameterVector};
use crate::rng::{self, Purpose};

/// Jitter added to each crafted copy, relative to the chosen λ.
const CRAFTED_JITTER: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackKind {
    None,
    LabelFlip {
        source: usize,
        target: usize,
        fraction: f64,
    },
    GaussianNoise {
        sigma: f64,
    },
    Scale {
        factor: f64,
    },
    Crafted {
        lambda_init: f64,
        halving_steps: u32,
    },
}

impl AttackKind {
    pub fn is_malicious(&self) -> bool {
        !matches!(self, AttackKind::None)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AttackKind::None => Ok(()),
            AttackKind::LabelFlip {
                source,
                target,
                fraction,
            } => {
                if source == target {
                    return Err(Error::config("label flip source and target must differ"));
                }
                if !(fraction > 0.0 && fraction <= 1.0) {
                    return Err(Error::config(format!(
                        "flip fraction must lie in (0, 1], got {fraction}"
                    )));
                }
                Ok(())
            }
            AttackKind::GaussianNoise { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::config(format!("noise sigma must be positive, got {sigma}")));
                }
                Ok(())
            }
            AttackKind::Scale { factor } => {
                if factor == 0.0 || !factor.is_finite() {
                    return Err(Error::config("scale factor must be finite and nonzero"));
                }
                Ok(())
            }
            AttackKind::Crafted { lambda_init, .. } => {
                if !(lambda_init > 0.0 && lambda_init.is_finite()) {
                    return Err(Error::config("crafted lambda_init must be positive"));
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackKind::None => f.write_str("none"),
            AttackKind::LabelFlip {
                source,
                target,
                fraction,
            } => write!(f, "label_flip({source},{target},{fraction})"),
            AttackKind::GaussianNoise { sigma } => write!(f, "gaussian_noise({sigma})"),
            AttackKind::Scale { factor } => write!(f, "scale({factor})"),
            AttackKind::Crafted {
                lambda_init,
                halving_steps,
            } => write!(f, "crafted({lambda_init},{halving_steps})"),
        }
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    /// Parses the [`Display`](fmt::Display) form, e.g. `scale(100)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once('(') {
            Some((name, rest)) => {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::config(format!("missing `)` in attack `{s}`")))?;
                let args: Vec<&str> = inner.split(',').map(str::trim).collect();
                (name.trim(), args)
            }
            None => (s, Vec::new()),
        };
        let num = |i: usize| -> Result<f64> {
            args.get(i)
                .ok_or_else(|| Error::config(format!("attack `{s}` is missing argument {}", i + 1)))?
                .parse::<f64>()
                .map_err(|_| Error::config(format!("attack `{s}`: argument {} is not a number", i + 1)))
        };
        let int = |i: usize| -> Result<i64> {
            args.get(i)
                .ok_or_else(|| Error::config(format!("attack `{s}` is missing argument {}", i + 1)))?
                .parse::<i64>()
                .map_err(|_| Error::config(format!("attack `{s}`: argument {} is not an integer", i + 1)))
        };
        let class = |i: usize| -> Result<usize> {
            usize::try_from(int(i)?).map_err(|_| Error::config("class index must be nonnegative"))
        };
        let arity = match name {
            "none" => 0,
            "label_flip" => 3,
            "gaussian_noise" | "scale" => 1,
            "crafted" => 2,
            other => return Err(Error::config(format!("unknown attack kind `{other}`"))),
        };
        if args.len() != arity && !(arity == 0 && args == [""]) {
            return Err(Error::config(format!(
                "attack `{name}` takes {arity} argument(s), got {}",
                args.len()
            )));
        }
        let kind = match name {
            "none" => AttackKind::None,
            "label_flip" => AttackKind::LabelFlip {
                source: class(0)?,
                target: class(1)?,
                fraction: num(2)?,
            },
            "gaussian_noise" => AttackKind::GaussianNoise { sigma: num(0)? },
            "scale" => AttackKind::Scale { factor: num(0)? },
            _ => AttackKind::Crafted {
                lambda_init: num(0)?,
                halving_steps: u32::try_from(int(1)?).map_err(|_| {
                    Error::config("crafted halving_steps must be a nonnegative integer")
                })?,
            },
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Static client → attack assignment. Clients not listed are honest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttackPlan {
    assignments: BTreeMap<usize, AttackKind>,
}

impl AttackPlan {
    pub fn new(assignments: BTreeMap<usize, AttackKind>) -> Result<Self> {
        for kind in assignments.values() {
            kind.validate()?;
        }
        let crafted: Vec<&AttackKind> = assignments
            .values()
            .filter(|k| matches!(k, AttackKind::Crafted { .. }))
            .collect();
        if crafted.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::config("all crafted clients must share lambda_init and halving_steps"));
        }
        let assignments = assignments
            .into_iter()
            .filter(|(_, k)| k.is_malicious())
            .collect();
        Ok(Self { assignments })
    }

    pub fn honest() -> Self {
        Self::default()
    }

    pub fn kind_of(&self, client_id: usize) -> AttackKind {
        self.assignments
            .get(&client_id)
            .copied()
            .unwrap_or(AttackKind::None)
    }

    pub fn malicious_count(&self) -> usize {
        self.assignments.len()
    }

    /// The fraction `p` of malicious clients among `n`.
    pub fn malicious_fraction(&self, n: usize) -> f64 {
        self.malicious_count() as f64 / n as f64
    }

    pub fn assignments(&self) -> &BTreeMap<usize, AttackKind> {
        &self.assignments
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        if let Some(&id) = self.assignments.keys().find(|&&id| id >= n) {
            return Err(Error::config(format!(
                "attack plan names client {id}, but there are only {n} clients"
            )));
        }
        if self.malicious_count() >= n {
            return Err(Error::config(format!(
                "{} malicious clients out of {n} leaves no honest client",
                self.malicious_count()
            )));
        }
        Ok(())
    }
}

/// Replaces the update with i.i.d. `Normal(0, σ²)` entries of the same
/// dimension. The honest values are ignored.
pub fn attack_gaussian_noise<R: Rng + ?Sized>(
    honest: &ParameterVector,
    sigma: f64,
    rng: &mut R,
) -> Result<ParameterVector> {
    AttackKind::GaussianNoise { sigma }.validate()?;
    let noise = (0..honest.dim())
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        })
        .collect();
    ParameterVector::new(noise)
}

pub fn attack_scale(honest: &ParameterVector, factor: f64) -> Result<ParameterVector> {
    AttackKind::Scale { factor }.validate()?;
    ParameterVector::new(honest.iter().map(|v| factor * v).collect())
}

/// Relabels `round(flip_fraction · count(source))` randomly chosen
/// `source` samples as `target`. Features are untouched.
pub fn attack_label_flip<R: Rng + ?Sized>(
    ds: &LabeledDataset,
    source: usize,
    target: usize,
    flip_fraction: f64,
    rng: &mut R,
) -> Result<LabeledDataset> {
    AttackKind::LabelFlip {
        source,
        target,
        fraction: flip_fraction,
    }
    .validate()?;
    let c = ds.class_count();
    if source >= c || target >= c {
        return Err(Error::config(format!(
            "label flip {source} -> {target} is outside the class range 0..{c}"
        )));
    }
    let mut candidates: Vec<usize> = (0..ds.len()).filter(|&i| ds.label(i) == source).collect();
    if candidates.is_empty() {
        return Err(Error::config(format!(
            "label flip source class {source} is absent from the client's data"
        )));
    }
    let count = (flip_fraction * candidates.len() as f64).round() as usize;
    candidates.shuffle(rng);
    let mut labels = ds.labels().to_vec();
    for &i in &candidates[..count] {
        labels[i] = target;
    }
    ds.with_labels(labels)
}

/// `global_prev − λ · sign(mean(honest) − global_prev)`
fn crafted_point(global_prev: &[f64], direction: &[f64], lambda: f64) -> Vec<f64> {
    global_prev
        .iter()
        .zip(direction)
        .map(|(g, s)| g - lambda * s)
        .collect()
}

/// Elementwise sign of the mean honest change, the attacker's estimate of
/// where benign training is heading.
fn benign_direction(global_prev: &[f64], honest: &[ParameterVector]) -> Vec<f64> {
    let m = honest.len() as f64;
    (0..global_prev.len())
        .map(|k| {
            let mean = honest.iter().map(|h| h[k]).sum::<f64>() / m;
            let delta = mean - global_prev[k];
            if delta > 0.0 {
                1.0
            } else if delta < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Largest `λ ∈ {λ₀·2⁻ᵏ : 0 ≤ k ≤ halving_steps}` for which `oracle`,
/// run over the crafted point plus the attacker's own honest results,
/// selects the crafted point. Falls back to the smallest candidate.
///
/// The crafted point takes client id 0 in the simulation and the honest
/// results ids `1..`. Any oracle error counts as "not selected".
pub fn search_crafted_lambda(
    global_prev: &ParameterVector,
    honest_of_malicious: &[ParameterVector],
    lambda_init: f64,
    halving_steps: u32,
    oracle: &dyn AggregationRule,
) -> Result<f64> {
    if honest_of_malicious.is_empty() {
        return Err(Error::config("crafted attack needs at least one malicious training result"));
    }
    AttackKind::Crafted {
        lambda_init,
        halving_steps,
    }
    .validate()?;
    for h in honest_of_malicious {
        if h.dim() != global_prev.dim() {
            return Err(Error::Dimension {
                expected: global_prev.dim(),
                actual: h.dim(),
            });
        }
    }
    let direction = benign_direction(global_prev, honest_of_malicious);
    let mut lambda = lambda_init;
    for _ in 0..=halving_steps {
        let candidate = ParameterVector::new(crafted_point(global_prev, &direction, lambda))?;
        let mut local = vec![ClientUpdate::new(0, candidate)];
        local.extend(
            honest_of_malicious
                .iter()
                .enumerate()
                .map(|(i, h)| ClientUpdate::new(i + 1, h.clone())),
        );
        if let Ok(result) = oracle.aggregate(&local) {
            if result.selected_client == Some(0) {
                return Ok(lambda);
            }
        }
        lambda /= 2.0;
    }
    Ok(lambda * 2.0)
}

/// Directed-deviation attack: every malicious client transmits the crafted
/// point plus small Gaussian jitter (σ = 0.01·λ), so no two copies are
/// identical.
pub fn attack_crafted<R: Rng + ?Sized>(
    global_prev: &ParameterVector,
    honest_of_malicious: &[ParameterVector],
    lambda_init: f64,
    halving_steps: u32,
    oracle: &dyn AggregationRule,
    rng: &mut R,
) -> Result<Vec<ParameterVector>> {
    let lambda = search_crafted_lambda(global_prev, honest_of_malicious, lambda_init, halving_steps, oracle)?;
    let direction = benign_direction(global_prev, honest_of_malicious);
    let base = crafted_point(global_prev, &direction, lambda);
    let jitter = Normal::new(0.0, CRAFTED_JITTER * lambda)
        .map_err(|e| Error::Numeric(format!("crafted jitter: {e}")))?;
    honest_of_malicious
        .iter()
        .map(|_| ParameterVector::new(base.iter().map(|b| b + jitter.sample(rng)).collect()))
        .collect()
}

/// What the transmission-time attacks need to know about the round.
pub struct AttackContext<'a> {
    pub seed: u64,
    pub round: usize,
    pub global_prev: &'a ParameterVector,
    /// The local selector crafted attackers tune against.
    pub crafted_oracle: &'a dyn AggregationRule,
}

/// Turns each client's honest training output into what it transmits.
/// Output is in ascending `client_id` order.
pub fn apply_attack_plan(
    plan: &AttackPlan,
    round_outputs: &BTreeMap<usize, ParameterVector>,
    ctx: &AttackContext<'_>,
) -> Result<Vec<ClientUpdate>> {
    if let Some(&id) = plan
        .assignments()
        .keys()
        .find(|id| !round_outputs.contains_key(id))
    {
        return Err(Error::config(format!("attack plan names unknown client {id}")));
    }
    let round = ctx.round as u64;
    let mut crafted_ids = Vec::new();
    let mut crafted_kind = None;
    let mut updates = Vec::with_capacity(round_outputs.len());
    for (&id, honest) in round_outputs {
        let sent = match plan.kind_of(id) {
            AttackKind::None | AttackKind::LabelFlip { .. } => honest.clone(),
            AttackKind::GaussianNoise { sigma } => {
                let mut rng = rng::stream(ctx.seed, id as u64, round, Purpose::Noise);
                attack_gaussian_noise(honest, sigma, &mut rng)?
            }
            AttackKind::Scale { factor } => attack_scale(honest, factor)?,
            kind @ AttackKind::Crafted { .. } => {
                crafted_ids.push(updates.len());
                crafted_kind = Some(kind);
                honest.clone()
            }
        };
        updates.push(ClientUpdate::new(id, sent));
    }
    if let Some(AttackKind::Crafted {
        lambda_init,
        halving_steps,
    }) = crafted_kind
    {
        let honest: Vec<ParameterVector> = crafted_ids.iter().map(|&i| updates[i].params.clone()).collect();
        let mut rng = rng::stream(ctx.seed, u64::MAX, round, Purpose::Crafted);
        let crafted = attack_crafted(
            ctx.global_prev,
            &honest,
            lambda_init,
            halving_steps,
            ctx.crafted_oracle,
            &mut rng,
        )?;
        for (&i, c) in crafted_ids.iter().zip(crafted) {
            updates[i].params = c;
        }
    }
    Ok(updates)
}

/// A malicious role used by scenario presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    GaussianNoise,
    LabelFlip,
    ScaleUp,
    ScaleNeg,
    Crafted,
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gaussian_noise" => Role::GaussianNoise,
            "label_flip" => Role::LabelFlip,
            "scale_up" => Role::ScaleUp,
            "scale_neg" => Role::ScaleNeg,
            "crafted" => Role::Crafted,
            other => return Err(Error::config(format!("unknown attack role `{other}`"))),
        })
    }
}

/// Tunables shared by every scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackParams {
    pub noise_sigma: f64,
    pub scale_up_factor: f64,
    pub scale_neg_factor: f64,
    pub flip_source: usize,
    pub flip_target: usize,
    pub flip_fraction: f64,
    pub crafted_lambda: f64,
    pub crafted_halvings: u32,
}

impl Default for AttackParams {
    fn default() -> Self {
        Self {
            noise_sigma: 1.0,
            scale_up_factor: 100.0,
            scale_neg_factor: -0.5,
            flip_source: 0,
            flip_target: 1,
            flip_fraction: 1.0,
            crafted_lambda: 1.0,
            crafted_halvings: 16,
        }
    }
}

impl AttackParams {
    fn kind_for(&self, role: Role) -> AttackKind {
        match role {
            Role::GaussianNoise => AttackKind::GaussianNoise {
                sigma: self.noise_sigma,
            },
            Role::LabelFlip => AttackKind::LabelFlip {
                source: self.flip_source,
                target: self.flip_target,
                fraction: self.flip_fraction,
            },
            Role::ScaleUp => AttackKind::Scale {
                factor: self.scale_up_factor,
            },
            Role::ScaleNeg => AttackKind::Scale {
                factor: self.scale_neg_factor,
            },
            Role::Crafted => AttackKind::Crafted {
                lambda_init: self.crafted_lambda,
                halving_steps: self.crafted_halvings,
            },
        }
    }
}

const PRESETS: &[(&str, &str)] = &[
    ("no_attack", include_str!("../presets/no_attack.conf")),
    ("label_flip_10", include_str!("../presets/label_flip_10.conf")),
    ("mix_40", include_str!("../presets/mix_40.conf")),
    ("noise_40", include_str!("../presets/noise_40.conf")),
    ("noise_scaled_40", include_str!("../presets/noise_scaled_40.conf")),
    ("crafted_40", include_str!("../presets/crafted_40.conf")),
    ("noise_30", include_str!("../presets/noise_30.conf")),
    ("mix_ham_40", include_str!("../presets/mix_ham_40.conf")),
];

#[derive(Debug, Clone, PartialEq)]
enum ScenarioSource {
    /// `(role, fraction of n)`, assigned to the highest client ids in order.
    Roles(Vec<(Role, f64)>),
    Custom(BTreeMap<usize, AttackKind>),
}

/// A named attack scenario, resolved into an [`AttackPlan`] once the
/// client count is known.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: String,
    source: ScenarioSource,
}

impl Scenario {
    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|(n, _)| *n)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            let names: Vec<&str> = Self::preset_names().collect();
            Error::config(format!(
                "unknown attack scenario `{name}` (valid: {}, custom)",
                names.join(", ")
            ))
        })?;
        let path = format!("presets/{name}.conf");
        let mut roles = Vec::new();
        for entry in kv::parse(text, Path::new(&path))? {
            let parse_err = |message: String| Error::Parse {
                path: path.clone().into(),
                line: entry.line,
                message,
            };
            let role = entry
                .key
                .strip_prefix("role.")
                .ok_or_else(|| parse_err(format!("unexpected key `{}`", entry.key)))?
                .parse::<Role>()
                .map_err(|e| parse_err(e.to_string()))?;
            let fraction: f64 = entry
                .value
                .parse()
                .map_err(|_| parse_err(format!("`{}` is not a fraction", entry.value)))?;
            roles.push((role, fraction));
        }
        Ok(Self {
            name: name.to_string(),
            source: ScenarioSource::Roles(roles),
        })
    }

    /// `round(fraction · n)` clients transmitting Gaussian noise.
    pub fn noise_fraction(fraction: f64) -> Self {
        Self {
            name: format!("noise_{}", (fraction * 100.0).round()),
            source: ScenarioSource::Roles(vec![(Role::GaussianNoise, fraction)]),
        }
    }

    pub fn custom(plan: BTreeMap<usize, AttackKind>) -> Self {
        Self {
            name: "custom".into(),
            source: ScenarioSource::Custom(plan),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn plan(&self, n: usize, params: &AttackParams) -> Result<AttackPlan> {
        let plan = match &self.source {
            ScenarioSource::Custom(map) => AttackPlan::new(map.clone())?,
            ScenarioSource::Roles(roles) => {
                let counts: Vec<(Role, usize)> = roles
                    .iter()
                    .map(|&(role, frac)| (role, (frac * n as f64).round() as usize))
                    .collect();
                let total: usize = counts.iter().map(|(_, c)| c).sum();
                if total >= n {
                    return Err(Error::config(format!(
                        "scenario `{}` makes {total} of {n} clients malicious",
                        self.name
                    )));
                }
                let mut map = BTreeMap::new();
                let mut next = n - total;
                for (role, count) in counts {
                    for _ in 0..count {
                        map.insert(next, params.kind_for(role));
                        next += 1;
                    }
                }
                AttackPlan::new(map)?
            }
        };
        plan.validate_for(n)?;
        Ok(plan)
    }
}
