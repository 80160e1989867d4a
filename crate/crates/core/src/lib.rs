//! Byzantine-robust federated averaging with distance-based outlier
//! suppression (DOS).
//!
//! The server computes pairwise Euclidean and cosine distances between the
//! client updates, scores each client with COPOD on both distance matrices,
//! and averages the updates with `softmax(-score)` weights. Baseline rules
//! (FedAvg, median, trimmed mean, Krum), attack injectors and a small
//! deterministic simulation harness live alongside.
//!
//! ```
//! use dosfl::{aggregate_dos, ClientUpdate, ParameterVector};
//!
//! let updates: Vec<ClientUpdate> = [[1.0, 1.0], [1.1, 0.9], [0.9, 1.1], [40.0, -40.0]]
//!     .iter()
//!     .enumerate()
//!     .map(|(i, v)| ClientUpdate::new(i, ParameterVector::new(v.to_vec()).unwrap()))
//!     .collect();
//! let result = aggregate_dos(&updates).unwrap();
//! assert!(result.weight_of(3).unwrap() < result.weight_of(0).unwrap());
//! ```

pub mod aggregators;
pub mod attacks;
pub mod cli;
pub mod config;
pub mod copod;
pub mod error;
pub mod harness;
pub mod kv;
pub mod params;
pub mod rng;

pub use aggregators::{
    aggregate_dos, aggregate_fedavg, aggregate_krum, aggregate_median, aggregate_trimmed_mean,
    AggregationResult, AggregationRule, AggregatorKind, AggregatorSpec, ClientWeights,
};
pub use attacks::{AttackKind, AttackParams, AttackPlan, Scenario};
pub use config::ExperimentConfig;
pub use copod::{copod_scores, dos_outlier_scores, OutlierScores, ScoreMatrix};
pub use error::{Error, Result};
pub use harness::experiment::{run_experiment, ExperimentOutcome, RoundRecord};
pub use harness::metrics::Metrics;
pub use params::{
    cosine_distance, euclidean_distance, pairwise_distances, softmax_weights, weighted_average,
    ClientUpdate, DistancePair, Matrix, ParameterVector, WeightVector,
};
