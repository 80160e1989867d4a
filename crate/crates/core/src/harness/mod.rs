//! Federated-learning simulation: synthetic data, local training, the server
//! loop and evaluation.

pub mod data;
pub mod experiment;
pub mod metrics;
pub mod model;
