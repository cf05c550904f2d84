//! Inverse-weighted aggregation: `s_f = μ_f / (σ_f + ε)` over every
//! (sample, timestep) row of feature-space activations.

use crate::attribution::scores::FeatureScores;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Streaming per-feature mean and population variance (Welford).
#[derive(Debug, Clone)]
pub struct InvAccumulator {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl InvAccumulator {
    pub fn new(n_features: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; n_features],
            m2: vec![0.0; n_features],
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.mean.len());
        self.count += 1;
        let n = self.count as f64;
        for ((m, m2), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(row) {
            let delta = v - *m;
            *m += delta / n;
            *m2 += delta * (v - *m);
        }
    }

    pub fn push_matrix(&mut self, m: &Matrix) {
        for t in 0..m.rows() {
            self.push_row(m.row(t));
        }
    }

    /// `(μ, σ)` with the population standard deviation.
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.count.max(1) as f64;
        let sigma = self.m2.iter().map(|m2| (m2.max(0.0) / n).sqrt()).collect();
        (self.mean.clone(), sigma)
    }

    pub fn finish(&self, method_tag: &str, feature_names: Vec<String>, epsilon: f64) -> Result<FeatureScores> {
        if self.count == 0 {
            return Err(Error::data("inverse-weighted aggregation over an empty stack"));
        }
        let (mu, sigma) = self.moments();
        let scores = mu.iter().zip(&sigma).map(|(m, s)| m / (s + epsilon)).collect();
        Ok(FeatureScores::new(method_tag, feature_names, scores, mu, sigma, epsilon))
    }
}

/// Aggregates a stack of `rows × F` matrices.
pub fn inv_aggregate(stack: &[Matrix], feature_names: Vec<String>, epsilon: f64) -> Result<FeatureScores> {
    let f = feature_names.len();
    let mut acc = InvAccumulator::new(f);
    for m in stack {
        if m.cols() != f {
            return Err(Error::config(format!("stack entry has {} columns, expected {f}", m.cols())));
        }
        acc.push_matrix(m);
    }
    acc.finish("inv", feature_names, epsilon)
}
