//! Feature attribution for LSTM sequence regressors.
//!
//! The crate bundles a small LSTM regressor with BPTT training, a data
//! pipeline for subject-wise time series, activation-based attribution with
//! inverse-weighted aggregation next to gradient, perturbation and Shapley
//! baselines, a retrain-and-score top-k evaluation, paired statistics and a
//! timing/allocation harness.

pub mod attribution;
pub mod bench;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod nn;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
