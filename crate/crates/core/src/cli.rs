//! Commands behind the `dosfl` binary, and the files they write.
//!
//! * `run` writes `metrics.csv`, `weights.csv` and `summary.json`.
//! * `compare` writes `compare.csv`, one row per aggregator and scenario.
//! * `sweep` writes `sweep.csv`, one row per sweep point.
//! * `copod score` prints one outlier score per CSV row.
//!
//! Data files depend only on the configuration. The wall-clock runtime in
//! `summary.json` is the only nondeterministic output.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::aggregators::AggregatorKind;
use crate::attacks::Scenario;
use crate::config::ExperimentConfig;
use crate::copod::{copod_scores, ScoreMatrix};
use crate::error::{Error, Result};
use crate::harness::experiment::{run_experiment, RoundRecord};
use crate::harness::metrics::Metrics;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    /// Seed precedence: `flag`, then the `env` value, then the file.
    pub fn with_env_seed(flag: Option<u64>, env: Option<&str>) -> Result<Option<u64>> {
        match (flag, env) {
            (Some(s), _) => Ok(Some(s)),
            (None, Some(v)) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Error::config(format!("DOSFL_SEED=`{v}` is not an unsigned integer"))),
            (None, None) => Ok(None),
        }
    }
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &overrides.output_dir {
        cfg.output_dir = dir.clone();
    }
    if cfg.train.rounds == 0 {
        return Err(Error::config("rounds must be at least 1"));
    }
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricAverages {
    pub macro_auc: f64,
    pub pairwise_auc: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryReport {
    pub aggregator: String,
    pub scenario: String,
    pub malicious_fraction: f64,
    pub rounds: usize,
    /// Means over all rounds.
    pub average: MetricAverages,
    pub final_round: Metrics,
    /// Per client, in id order; `null` when the rule gives no weights.
    pub mean_weights: Vec<Option<f64>>,
    pub attack_kinds: Vec<String>,
    pub runtime_seconds: f64,
    pub config: BTreeMap<String, String>,
}

impl SummaryReport {
    pub fn from_records(cfg: &ExperimentConfig, records: &[RoundRecord], runtime_seconds: f64) -> Result<Self> {
        let last = records
            .last()
            .ok_or_else(|| Error::config("a summary needs at least one round"))?;
        let t = records.len() as f64;
        let mean = |f: fn(&Metrics) -> f64| records.iter().map(|r| f(&r.metrics)).sum::<f64>() / t;
        let n = cfg.clients;
        let mean_weights = (0..n)
            .map(|i| {
                records
                    .iter()
                    .map(|r| r.weights[i])
                    .sum::<Option<f64>>()
                    .map(|s| s / t)
            })
            .collect();
        Ok(Self {
            aggregator: cfg.aggregator.kind.to_string(),
            scenario: cfg.scenario.name().to_string(),
            malicious_fraction: cfg.attack_plan()?.malicious_fraction(n),
            rounds: records.len(),
            average: MetricAverages {
                macro_auc: mean(|m| m.macro_auc),
                pairwise_auc: mean(|m| m.pairwise_auc),
                accuracy: mean(|m| m.accuracy),
            },
            final_round: last.metrics.clone(),
            mean_weights,
            attack_kinds: last.attacks.iter().map(ToString::to_string).collect(),
            runtime_seconds,
            config: cfg.to_key_values(),
        })
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

pub fn write_metrics_csv(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["round", "macro_auc", "pairwise_auc", "accuracy"])?;
    for r in records {
        w.write_record([
            r.round.to_string(),
            r.metrics.macro_auc.to_string(),
            r.metrics.pairwise_auc.to_string(),
            r.metrics.accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_weights_csv(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["round", "client_id", "weight_or_marker", "attack_kind"])?;
    for r in records {
        for (i, (weight, attack)) in r.weights.iter().zip(&r.attacks).enumerate() {
            w.write_record([
                r.round.to_string(),
                i.to_string(),
                weight.map_or_else(|| "NA".to_string(), |v| v.to_string()),
                attack.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs one experiment and writes its three output files.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<SummaryReport> {
    cfg.validate()?;
    let start = Instant::now();
    let outcome = run_experiment(cfg)?;
    let summary = SummaryReport::from_records(cfg, &outcome.records, start.elapsed().as_secs_f64())?;
    fs::create_dir_all(&cfg.output_dir)?;
    write_metrics_csv(&cfg.output_dir.join("metrics.csv"), &outcome.records)?;
    write_weights_csv(&cfg.output_dir.join("weights.csv"), &outcome.records)?;
    fs::write(
        cfg.output_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(summary)
}

/// Mean over rounds and final value of the configured report metric.
fn run_point(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    let outcome = run_experiment(cfg)?;
    let values: Vec<f64> = outcome
        .records
        .iter()
        .map(|r| cfg.report_metric.of(&r.metrics))
        .collect();
    let last = *values
        .last()
        .ok_or_else(|| Error::config("rounds must be at least 1"))?;
    Ok((values.iter().sum::<f64>() / values.len() as f64, last))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub aggregator: String,
    pub scenario: String,
    pub avg_metric: f64,
    pub final_metric: f64,
}

pub fn parse_aggregators(list: &str) -> Result<Vec<AggregatorKind>> {
    let kinds = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>>>()?;
    if kinds.is_empty() {
        return Err(Error::config("empty aggregator list"));
    }
    Ok(kinds)
}

/// Every aggregator under every scenario (default: the config's own),
/// same seed throughout. Writes `compare.csv`.
pub fn cmd_compare(
    cfg: &ExperimentConfig,
    aggregators: &[AggregatorKind],
    scenarios: Option<&[String]>,
) -> Result<Vec<CompareRow>> {
    if aggregators.is_empty() {
        return Err(Error::config("empty aggregator list"));
    }
    let scenarios: Vec<Scenario> = match scenarios {
        Some([]) => return Err(Error::config("empty scenario list")),
        Some(names) => names.iter().map(|s| Scenario::preset(s)).collect::<Result<_>>()?,
        None => vec![cfg.scenario.clone()],
    };
    let mut points = Vec::new();
    for &kind in aggregators {
        for scenario in &scenarios {
            let mut c = cfg.clone();
            c.aggregator.kind = kind;
            c.scenario = scenario.clone();
            c.validate()?;
            points.push(c);
        }
    }
    let results: Vec<(f64, f64)> = points.par_iter().map(run_point).collect::<Result<_>>()?;
    let rows: Vec<CompareRow> = points
        .iter()
        .zip(results)
        .map(|(c, (avg, fin))| CompareRow {
            aggregator: c.aggregator.kind.to_string(),
            scenario: c.scenario.name().to_string(),
            avg_metric: avg,
            final_metric: fin,
        })
        .collect();
    fs::create_dir_all(&cfg.output_dir)?;
    let mut w = csv_writer(&cfg.output_dir.join("compare.csv"))?;
    w.write_record(["aggregator", "scenario", "avg_metric", "final_metric"])?;
    for r in &rows {
        w.write_record([
            r.aggregator.clone(),
            r.scenario.clone(),
            r.avg_metric.to_string(),
            r.final_metric.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Fraction of clients sending Gaussian noise.
    MaliciousFraction,
    ClientCount,
}

impl SweepParam {
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepParam::MaliciousFraction => vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            SweepParam::ClientCount => vec![5.0, 10.0, 20.0, 40.0],
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::MaliciousFraction => "malicious_fraction",
            SweepParam::ClientCount => "client_count",
        })
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "malicious_fraction" => Ok(SweepParam::MaliciousFraction),
            "client_count" => Ok(SweepParam::ClientCount),
            other => Err(Error::config(format!(
                "unknown sweep parameter `{other}` (valid: malicious_fraction, client_count)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_param: SweepParam,
    pub value: f64,
    pub avg_metric: f64,
    pub final_metric: f64,
}

pub fn parse_values(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::config(format!("sweep value `{s}` is not a number")))
        })
        .collect()
}

/// One run per value; writes `sweep.csv`.
pub fn cmd_sweep(cfg: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::config("empty sweep value list"));
    }
    let points = values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            match param {
                SweepParam::MaliciousFraction => {
                    if !(0.0..1.0).contains(&v) {
                        return Err(Error::config(format!("malicious fraction {v} outside [0, 1)")));
                    }
                    c.scenario = Scenario::noise_fraction(v);
                }
                SweepParam::ClientCount => {
                    if v.fract() != 0.0 || v < 2.0 {
                        return Err(Error::config(format!("client count {v} must be an integer >= 2")));
                    }
                    c.clients = v as usize;
                }
            }
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<(f64, f64)> = points.par_iter().map(run_point).collect::<Result<_>>()?;
    let rows: Vec<SweepRow> = values
        .iter()
        .zip(results)
        .map(|(&value, (avg, fin))| SweepRow {
            sweep_param: param,
            value,
            avg_metric: avg,
            final_metric: fin,
        })
        .collect();
    fs::create_dir_all(&cfg.output_dir)?;
    let mut w = csv_writer(&cfg.output_dir.join("sweep.csv"))?;
    w.write_record(["sweep_param", "value", "avg_metric", "final_metric"])?;
    for r in &rows {
        w.write_record([
            r.sweep_param.to_string(),
            r.value.to_string(),
            r.avg_metric.to_string(),
            r.final_metric.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

/// Reads a headerless numeric CSV into a score matrix.
pub fn read_score_matrix(path: &Path) -> Result<ScoreMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: r + 1,
                    message: format!("column {}: `{field}` is not a finite number", c + 1),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: r + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    ScoreMatrix::from_rows(&rows)
}

pub fn cmd_copod_score(path: &Path) -> Result<Vec<f64>> {
    Ok(copod_scores(&read_score_matrix(path)?)?.into_inner())
}

/// `%.9g`: nine significant digits, trailing zeros dropped.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(4.1588830833596715), "4.15888308");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1234567890.0), "1.23456789e+09");
        assert_eq!(format_sig9(0.000123456789012), "0.000123456789");
        assert_eq!(format_sig9(0.0000123), "1.23e-05");
        assert_eq!(format_sig9(9.9999999996), "10");
        assert_eq!(format_sig9(-2.5), "-2.5");
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(Overrides::with_env_seed(Some(1), Some("2")).unwrap(), Some(1));
        assert_eq!(Overrides::with_env_seed(None, Some("2")).unwrap(), Some(2));
        assert_eq!(Overrides::with_env_seed(None, None).unwrap(), None);
        assert!(Overrides::with_env_seed(None, Some("x")).is_err());
    }

    #[test]
    fn parse_lists() {
        assert_eq!(
            parse_aggregators("fedavg, dos").unwrap(),
            vec![AggregatorKind::FedAvg, AggregatorKind::Dos]
        );
        let err = parse_aggregators("fedavg,bulyan").unwrap_err();
        assert!(err.to_string().contains("trimmed_mean"), "{err}");
        assert_eq!(parse_values("0.1,0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_values("").unwrap().is_empty());
    }

    #[test]
    fn copod_csv_errors_name_location() {
        let dir = tempfile::tempdir().unwrap();
        let ragged = dir.path().join("ragged.csv");
        fs::write(&ragged, "1,2\n3,4\n5\n").unwrap();
        let err = cmd_copod_score(&ragged).unwrap_err();
        assert!(err.to_string().ends_with("ragged.csv:3: expected 2 columns, found 1"), "{err}");

        let bad = dir.path().join("bad.csv");
        fs::write(&bad, "1,2\n3,x\n").unwrap();
        let err = cmd_copod_score(&bad).unwrap_err();
        assert!(err.to_string().ends_with("bad.csv:2: column 2: `x` is not a finite number"), "{err}");

        let single = dir.path().join("single.csv");
        fs::write(&single, "1,2\n").unwrap();
        assert_eq!(cmd_copod_score(&single).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn copod_csv_scores() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(&p, "0\n0\n0\n10\n").unwrap();
        let s = cmd_copod_score(&p).unwrap();
        let max = s.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(s[3], max);

        fs::write(&p, "1,2\n1,2\n1,2\n").unwrap();
        let s = cmd_copod_score(&p).unwrap();
        assert!(s.iter().all(|&v| v == s[0]));
    }
}
