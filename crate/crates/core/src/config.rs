//! Experiment configuration.
//!
//! Files use the flat `key = value` format from [`crate::kv`]. Every key is
//! optional; the defaults reproduce the reference desk-scale setting (10
//! clients, 4 Gaussian classes in 20 dimensions, logistic model, 100 rounds).
//!
//! | key | default |
//! |---|---|
//! | `seed` | `0` |
//! | `clients` | `10` |
//! | `rounds` | `100` |
//! | `model.kind` | `logistic` (`mlp1`) |
//! | `model.hidden_dim` | `32` |
//! | `data.classes` | `4` |
//! | `data.input_dim` | `20` |
//! | `data.samples_per_class` | `200` |
//! | `data.separation` | `6` |
//! | `data.test_fraction` | `0.2` |
//! | `data.partition` | `iid` (`label_skew`) |
//! | `data.alpha` | `0.5` |
//! | `train.learning_rate` | `0.01` |
//! | `train.local_steps` | `1` |
//! | `train.batch_size` | `16` |
//! | `aggregator` | `dos` |
//! | `trim_fraction` | `0.4` |
//! | `krum_f` | `min(ceil(0.4 n), n - 3)` |
//! | `attack` | `no_attack`, any preset name, or `custom` |
//! | `attack.plan.<id>` | e.g. `scale(100)`, with `attack = custom` |
//! | `attack.noise_sigma` | `1` |
//! | `attack.scale_up` | `100` |
//! | `attack.scale_neg` | `-0.5` |
//! | `attack.flip_source` / `attack.flip_target` | `0` / `1` |
//! | `attack.flip_fraction` | `1` |
//! | `attack.crafted_lambda` | `1` |
//! | `attack.crafted_halvings` | `10` |
//! | `report.metric` | `accuracy` (`macro_auc`, `pairwise_auc`) |
//! | `output_dir` | `out` |

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::aggregators::{AggregatorKind, AggregatorSpec};
use crate::attacks::{AttackKind, AttackParams, Scenario};
use crate::error::{Error, Result};
use crate::harness::data::SyntheticSpec;
use crate::harness::metrics::Metrics;
use crate::harness::model::{ModelKind, ModelSpec, TrainConfig};
use crate::kv;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Partition {
    Iid,
    LabelSkew { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataConfig {
    pub synthetic: SyntheticSpec,
    pub test_fraction: f64,
    pub partition: Partition,
}

/// Which metric `compare` and `sweep` summarize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricName {
    MacroAuc,
    PairwiseAuc,
    Accuracy,
}

impl MetricName {
    pub fn of(self, m: &Metrics) -> f64 {
        match self {
            MetricName::MacroAuc => m.macro_auc,
            MetricName::PairwiseAuc => m.pairwise_auc,
            MetricName::Accuracy => m.accuracy,
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricName::MacroAuc => "macro_auc",
            MetricName::PairwiseAuc => "pairwise_auc",
            MetricName::Accuracy => "accuracy",
        })
    }
}

impl FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "macro_auc" => Ok(MetricName::MacroAuc),
            "pairwise_auc" => Ok(MetricName::PairwiseAuc),
            "accuracy" => Ok(MetricName::Accuracy),
            other => Err(Error::config(format!(
                "unknown metric `{other}` (valid: macro_auc, pairwise_auc, accuracy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub clients: usize,
    pub model_kind: ModelKind,
    pub hidden_dim: usize,
    pub data: DataConfig,
    pub train: TrainConfig,
    pub aggregator: AggregatorSpec,
    pub scenario: Scenario,
    pub attack_params: AttackParams,
    pub report_metric: MetricName,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            clients: 10,
            model_kind: ModelKind::Logistic,
            hidden_dim: 32,
            data: DataConfig {
                synthetic: SyntheticSpec {
                    class_count: 4,
                    input_dim: 20,
                    samples_per_class: 200,
                    class_separation: 6.0,
                },
                test_fraction: 0.2,
                partition: Partition::Iid,
            },
            train: TrainConfig::default(),
            aggregator: AggregatorSpec::new(AggregatorKind::Dos),
            scenario: Scenario::preset("no_attack").expect("bundled preset"),
            attack_params: AttackParams::default(),
            report_metric: MetricName::Accuracy,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: FromStr>(value: &str, what: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{value}` is not a valid {what}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Parses and validates config text. Errors name the offending line.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let entries = kv::parse(text, path)?;
        let mut cfg = Self::default();
        let mut lines: HashMap<String, usize> = HashMap::new();
        let mut attack_name: Option<String> = None;
        let mut custom: BTreeMap<usize, AttackKind> = BTreeMap::new();
        let mut trim_fraction = None;
        let mut krum_f = None;
        let mut alpha = 0.5;
        let mut partition = "iid".to_string();

        for e in &entries {
            let at = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: e.line,
                message,
            };
            if lines.insert(e.key.clone(), e.line).is_some() {
                return Err(at(format!("duplicate key `{}`", e.key)));
            }
            let v = e.value.as_str();
            let syn = &mut cfg.data.synthetic;
            let ap = &mut cfg.attack_params;
            let r: std::result::Result<(), String> = (|| {
                match e.key.as_str() {
                    "seed" => cfg.seed = parse_num(v, "seed")?,
                    "clients" => cfg.clients = parse_num(v, "client count")?,
                    "rounds" => cfg.train.rounds = parse_num(v, "round count")?,
                    "model.kind" => cfg.model_kind = v.parse().map_err(strip)?,
                    "model.hidden_dim" => cfg.hidden_dim = parse_num(v, "hidden width")?,
                    "data.classes" => syn.class_count = parse_num(v, "class count")?,
                    "data.input_dim" => syn.input_dim = parse_num(v, "input dimension")?,
                    "data.samples_per_class" => syn.samples_per_class = parse_num(v, "sample count")?,
                    "data.separation" => syn.class_separation = parse_num(v, "number")?,
                    "data.test_fraction" => cfg.data.test_fraction = parse_num(v, "fraction")?,
                    "data.partition" => partition = v.to_string(),
                    "data.alpha" => alpha = parse_num(v, "number")?,
                    "train.learning_rate" => cfg.train.learning_rate = parse_num(v, "number")?,
                    "train.local_steps" => cfg.train.local_steps = parse_num(v, "step count")?,
                    "train.batch_size" => cfg.train.batch_size = parse_num(v, "batch size")?,
                    "aggregator" => {
                        cfg.aggregator.kind = v.parse().map_err(strip)?
                    }
                    "trim_fraction" => trim_fraction = Some(parse_num(v, "fraction")?),
                    "krum_f" => krum_f = Some(parse_num(v, "byzantine count")?),
                    "attack" => attack_name = Some(v.to_string()),
                    "attack.noise_sigma" => ap.noise_sigma = parse_num(v, "number")?,
                    "attack.scale_up" => ap.scale_up_factor = parse_num(v, "number")?,
                    "attack.scale_neg" => ap.scale_neg_factor = parse_num(v, "number")?,
                    "attack.flip_source" => ap.flip_source = parse_num(v, "class index")?,
                    "attack.flip_target" => ap.flip_target = parse_num(v, "class index")?,
                    "attack.flip_fraction" => ap.flip_fraction = parse_num(v, "fraction")?,
                    "attack.crafted_lambda" => ap.crafted_lambda = parse_num(v, "number")?,
                    "attack.crafted_halvings" => {
                        ap.crafted_halvings = v.parse().map_err(|_| {
                            format!("crafted_halvings must be a nonnegative integer, got `{v}`")
                        })?
                    }
                    "report.metric" => cfg.report_metric = v.parse().map_err(strip)?,
                    "output_dir" => cfg.output_dir = PathBuf::from(v),
                    key => match key.strip_prefix("attack.plan.") {
                        Some(id) => {
                            let id: usize = parse_num(id, "client id")?;
                            let kind: AttackKind = v.parse().map_err(strip)?;
                            custom.insert(id, kind);
                        }
                        None => return Err(format!("unknown key `{key}`")),
                    },
                }
                Ok(())
            })();
            r.map_err(at)?;
        }

        let anchored = |key: &str, message: String| match lines.get(key) {
            Some(&line) => Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            },
            None => Error::Config(message),
        };

        cfg.data.partition = match partition.as_str() {
            "iid" => Partition::Iid,
            "label_skew" => Partition::LabelSkew { alpha },
            other => {
                return Err(anchored(
                    "data.partition",
                    format!("unknown partition `{other}` (valid: iid, label_skew)"),
                ))
            }
        };
        if let Some(tf) = trim_fraction {
            cfg.aggregator.trim_fraction = tf;
        }
        cfg.aggregator.krum_f = krum_f;

        cfg.scenario = match attack_name.as_deref() {
            None | Some("no_attack") if !custom.is_empty() => {
                return Err(anchored("attack", "attack.plan entries need `attack = custom`".into()))
            }
            Some("custom") => Scenario::custom(custom),
            Some(name) => {
                if !custom.is_empty() {
                    return Err(anchored("attack", "attack.plan entries need `attack = custom`".into()));
                }
                Scenario::preset(name).map_err(|e| anchored("attack", strip(e)))?
            }
            None => Scenario::preset("no_attack")?,
        };

        cfg.check().map_err(|(key, msg)| anchored(key, msg))?;
        Ok(cfg)
    }

    /// Checks cross-field constraints. On failure, names the key to blame.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.clients < 2 {
            return Err(("clients", format!("need at least 2 clients, got {}", self.clients)));
        }
        self.model_spec().validate().map_err(|e| ("model.kind", strip(e)))?;
        self.train.validate().map_err(|e| ("train.learning_rate", strip(e)))?;
        if !(self.data.test_fraction > 0.0 && self.data.test_fraction < 1.0) {
            return Err(("data.test_fraction", "test_fraction must lie in (0, 1)".into()));
        }
        if let Partition::LabelSkew { alpha } = self.data.partition {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(("data.alpha", format!("alpha must be positive, got {alpha}")));
            }
        }
        let syn = &self.data.synthetic;
        if syn.class_count < 2 || syn.input_dim == 0 || syn.samples_per_class == 0 {
            return Err(("data.classes", "need at least 2 classes, 1 input dimension and 1 sample per class".into()));
        }
        let train_size = syn.class_count * syn.samples_per_class
            - ((syn.samples_per_class as f64 * self.data.test_fraction).round() as usize) * syn.class_count;
        if train_size < self.clients {
            return Err(("clients", format!("{train_size} training samples cannot cover {} clients", self.clients)));
        }
        self.aggregator.validate(self.clients).map_err(|e| {
            let key = match self.aggregator.kind {
                AggregatorKind::TrimmedMean => "trim_fraction",
                AggregatorKind::Krum => "krum_f",
                _ => "aggregator",
            };
            (key, strip(e))
        })?;
        let plan = self.attack_plan().map_err(|e| ("attack", strip(e)))?;
        for kind in plan.assignments().values() {
            if let AttackKind::LabelFlip { source, target, .. } = *kind {
                if source >= syn.class_count || target >= syn.class_count {
                    return Err(("attack.flip_source", format!(
                        "label flip {source} -> {target} is outside the class range 0..{}",
                        syn.class_count
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(_, msg)| Error::Config(msg))
    }

    pub fn model_spec(&self) -> ModelSpec {
        let s = &self.data.synthetic;
        match self.model_kind {
            ModelKind::Logistic => ModelSpec::logistic(s.input_dim, s.class_count),
            ModelKind::Mlp1 => ModelSpec::mlp1(s.input_dim, self.hidden_dim, s.class_count),
        }
    }

    pub fn attack_plan(&self) -> Result<crate::attacks::AttackPlan> {
        self.scenario.plan(self.clients, &self.attack_params)
    }

    /// The effective configuration as `key = value` pairs, defaults included.
    pub fn to_key_values(&self) -> BTreeMap<String, String> {
        let s = &self.data.synthetic;
        let a = &self.attack_params;
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("seed", self.seed.to_string());
        put("clients", self.clients.to_string());
        put("rounds", self.train.rounds.to_string());
        put("model.kind", self.model_kind.to_string());
        put("model.hidden_dim", self.hidden_dim.to_string());
        put("data.classes", s.class_count.to_string());
        put("data.input_dim", s.input_dim.to_string());
        put("data.samples_per_class", s.samples_per_class.to_string());
        put("data.separation", s.class_separation.to_string());
        put("data.test_fraction", self.data.test_fraction.to_string());
        match self.data.partition {
            Partition::Iid => put("data.partition", "iid".into()),
            Partition::LabelSkew { alpha } => {
                put("data.partition", "label_skew".into());
                put("data.alpha", alpha.to_string());
            }
        }
        put("train.learning_rate", self.train.learning_rate.to_string());
        put("train.local_steps", self.train.local_steps.to_string());
        put("train.batch_size", self.train.batch_size.to_string());
        put("aggregator", self.aggregator.kind.to_string());
        put("trim_fraction", self.aggregator.trim_fraction.to_string());
        put("krum_f", self.aggregator.effective_krum_f(self.clients).to_string());
        put("attack", self.scenario.name().to_string());
        if let Ok(plan) = self.attack_plan() {
            for (id, kind) in plan.assignments() {
                put(&format!("attack.plan.{id}"), kind.to_string());
            }
        }
        put("attack.noise_sigma", a.noise_sigma.to_string());
        put("attack.scale_up", a.scale_up_factor.to_string());
        put("attack.scale_neg", a.scale_neg_factor.to_string());
        put("attack.flip_source", a.flip_source.to_string());
        put("attack.flip_target", a.flip_target.to_string());
        put("attack.flip_fraction", a.flip_fraction.to_string());
        put("attack.crafted_lambda", a.crafted_lambda.to_string());
        put("attack.crafted_halvings", a.crafted_halvings.to_string());
        put("report.metric", self.report_metric.to_string());
        put("output_dir", self.output_dir.display().to_string());
        m
    }
}

/// Drops the "configuration error: " prefix so the message can be re-anchored.
fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}
