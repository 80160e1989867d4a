//! The server loop.
//!
//! Each round broadcasts the global model, trains every client locally
//! (in parallel), lets malicious clients rewrite what they send, aggregates
//! and evaluates on the held-out test set.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::aggregators::{AggregationRule, AggregatorSpec};
use crate::attacks::{apply_attack_plan, attack_label_flip, AttackContext, AttackKind, AttackPlan};
use crate::config::{ExperimentConfig, Partition};
use crate::error::{Error, Result};
use crate::harness::data::{
    generate_synthetic, partition_iid, partition_label_skew, split_holdout, LabeledDataset,
};
use crate::harness::metrics::{score_metrics, Metrics};
use crate::harness::model::{local_train, ModelSpec};
use crate::params::ParameterVector;
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub aggregator: &'static str,
    /// Per-client weight in `client_id` order; `None` for rules without
    /// per-client attribution.
    pub weights: Vec<Option<f64>>,
    pub attacks: Vec<AttackKind>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<RoundRecord>,
    pub initial_global: ParameterVector,
    pub final_global: ParameterVector,
}

/// Data, model and attack assignment for one run, before any round.
pub struct Setup {
    pub model: ModelSpec,
    pub shards: Vec<LabeledDataset>,
    pub test: LabeledDataset,
    pub plan: AttackPlan,
    pub initial: ParameterVector,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Setup> {
    cfg.validate()?;
    let seed = cfg.seed;
    let n = cfg.clients;
    let model = cfg.model_spec();
    let full = generate_synthetic(&cfg.data.synthetic, &mut rng::global_stream(seed, Purpose::Data))?;
    let (train, test) = split_holdout(&full, cfg.data.test_fraction, &mut rng::global_stream(seed, Purpose::Split))?;
    let mut part_rng = rng::global_stream(seed, Purpose::Partition);
    let mut shards = match cfg.data.partition {
        Partition::Iid => partition_iid(&train, n, &mut part_rng)?,
        Partition::LabelSkew { alpha } => partition_label_skew(&train, n, alpha, &mut part_rng)?,
    };
    let plan = cfg.attack_plan()?;
    for (&id, kind) in plan.assignments() {
        if let AttackKind::LabelFlip {
            source,
            target,
            fraction,
        } = *kind
        {
            let mut flip_rng = rng::stream(seed, id as u64, u64::MAX, Purpose::LabelFlip);
            shards[id] = attack_label_flip(&shards[id], source, target, fraction, &mut flip_rng)?;
        }
    }
    let initial = model.init_params(&mut rng::global_stream(seed, Purpose::Init))?;
    Ok(Setup {
        model,
        shards,
        test,
        plan,
        initial,
    })
}

pub fn evaluate(model: &ModelSpec, params: &ParameterVector, test: &LabeledDataset) -> Result<Metrics> {
    if params.dim() != model.param_count() {
        return Err(Error::Dimension {
            expected: model.param_count(),
            actual: params.dim(),
        });
    }
    let probs: Vec<Vec<f64>> = (0..test.len())
        .map(|i| model.probabilities(params, test.sample(i)))
        .collect();
    score_metrics(&probs, test.labels(), test.class_count())
}

/// Runs all `cfg.train.rounds` rounds. Deterministic in `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let setup = prepare(cfg)?;
    let n = cfg.clients;
    let crafted_oracle = AggregatorSpec::krum(None);
    let attacks: Vec<AttackKind> = (0..n).map(|i| setup.plan.kind_of(i)).collect();
    let mut global = setup.initial.clone();
    let mut records = Vec::with_capacity(cfg.train.rounds);

    for t in 0..cfg.train.rounds {
        let step = || -> Result<(ParameterVector, RoundRecord)> {
            let outputs: Vec<ParameterVector> = setup
                .shards
                .par_iter()
                .enumerate()
                .map(|(i, shard)| {
                    let mut r = rng::stream(cfg.seed, i as u64, t as u64, Purpose::Train);
                    local_train(&setup.model, &global, shard, &cfg.train, &mut r)
                })
                .collect::<Result<_>>()?;
            let outputs: BTreeMap<usize, ParameterVector> = outputs.into_iter().enumerate().collect();
            let ctx = AttackContext {
                seed: cfg.seed,
                round: t,
                global_prev: &global,
                crafted_oracle: &crafted_oracle,
            };
            let sent = apply_attack_plan(&setup.plan, &outputs, &ctx)?;
            let result = cfg.aggregator.aggregate(&sent)?;
            let metrics = evaluate(&setup.model, &result.new_global, &setup.test)?;
            let record = RoundRecord {
                round: t,
                aggregator: cfg.aggregator.name(),
                weights: (0..n).map(|i| result.weight_of(i)).collect(),
                attacks: attacks.clone(),
                metrics,
            };
            Ok((result.new_global, record))
        };
        let (next, record) = step().map_err(|e| e.at_round(t))?;
        global = next;
        records.push(record);
    }

    Ok(ExperimentOutcome {
        records,
        initial_global: setup.initial,
        final_global: global,
    })
}
