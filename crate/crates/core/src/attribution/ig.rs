//! Integrated Gradients with the trapezoidal rule.
//!
//! `attr = (x − x̄) ⊙ Σ_k w_k ∇f(x̄ + α_k (x − x̄))` with `α_k = k/steps` and
//! trapezoid weights (`1/(2·steps)` at the ends, `1/steps` inside).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::attribution::scores::{feature_stream, FeatureScores};
use crate::data::SequenceDataset;
use crate::error::{Error, Result};
use crate::nn::Differentiable;
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Zero,
    Mean,
    Random,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Zero => "zero",
            BaselineKind::Mean => "mean",
            BaselineKind::Random => "random",
        }
    }
}

pub fn integrated_gradients<M: Differentiable + ?Sized>(
    model: &M,
    x: &Matrix,
    baseline: &Matrix,
    steps: usize,
) -> Result<Matrix> {
    if steps == 0 {
        return Err(Error::config("integrated gradients needs steps >= 1"));
    }
    if x.shape() != baseline.shape() {
        return Err(Error::config(format!(
            "baseline shape {:?} differs from input shape {:?}",
            baseline.shape(),
            x.shape()
        )));
    }
    let (rows, cols) = x.shape();
    let mut avg_grad = Matrix::zeros(rows, cols);
    let mut point = Matrix::zeros(rows, cols);
    for k in 0..=steps {
        let alpha = k as f64 / steps as f64;
        let weight = if k == 0 || k == steps { 0.5 } else { 1.0 } / steps as f64;
        for ((p, &xv), &bv) in point.as_mut_slice().iter_mut().zip(x.as_slice()).zip(baseline.as_slice()) {
            *p = bv + alpha * (xv - bv);
        }
        let (_, grad) = model.input_gradient(&point)?;
        if !grad.is_finite() {
            return Err(Error::Numeric {
                tensor: "ig_gradient".into(),
            });
        }
        for (a, g) in avg_grad.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *a += weight * g;
        }
    }
    for ((a, &xv), &bv) in avg_grad.as_mut_slice().iter_mut().zip(x.as_slice()).zip(baseline.as_slice()) {
        *a *= xv - bv;
    }
    Ok(avg_grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgSettings {
    pub steps: usize,
    pub random_draws: usize,
    pub seed: u64,
}

impl Default for IgSettings {
    fn default() -> Self {
        Self {
            steps: 50,
            random_draws: 5,
            seed: 0,
        }
    }
}

/// Baselines for one attribution run; `Random` yields several draws whose
/// attributions are averaged.
pub fn make_baselines(kind: BaselineKind, data: &SequenceDataset, settings: &IgSettings) -> Result<Vec<Matrix>> {
    let (t, f) = (data.window_len, data.n_features());
    Ok(match kind {
        BaselineKind::Zero => vec![Matrix::zeros(t, f)],
        BaselineKind::Mean => {
            let means = data.feature_means();
            let mut m = Matrix::zeros(t, f);
            for r in 0..t {
                m.row_mut(r).copy_from_slice(&means);
            }
            vec![m]
        }
        BaselineKind::Random => {
            if settings.random_draws == 0 {
                return Err(Error::config("random_baseline_draws must be >= 1"));
            }
            // One stream per feature name, so permuting columns permutes the draws.
            let mut draws = vec![Matrix::zeros(t, f); settings.random_draws];
            for (c, name) in data.feature_names.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
                rng.set_stream(feature_stream(name));
                for m in draws.iter_mut() {
                    for r in 0..t {
                        m.set(r, c, StandardNormal.sample(&mut rng));
                    }
                }
            }
            draws
        }
    })
}

/// Global score per feature: mean `|attr[t, f]|` over samples and timesteps.
pub fn ig_feature_scores<M: Differentiable + ?Sized>(
    model: &M,
    data: &SequenceDataset,
    kind: BaselineKind,
    settings: &IgSettings,
) -> Result<FeatureScores> {
    if data.is_empty() {
        return Err(Error::data("integrated gradients needs a non-empty dataset"));
    }
    if model.input_dim() != data.n_features() {
        return Err(Error::config(format!(
            "model expects {} features, dataset has {}",
            model.input_dim(),
            data.n_features()
        )));
    }
    let baselines = make_baselines(kind, data, settings)?;
    let f = data.n_features();
    let mut sum = vec![0.0; f];
    let mut sum_sq = vec![0.0; f];
    let mut count = 0usize;
    let mut attr = Matrix::zeros(data.window_len, f);
    for s in &data.samples {
        attr.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        for b in &baselines {
            let a = integrated_gradients(model, &s.x, b, settings.steps)?;
            for (acc, v) in attr.as_mut_slice().iter_mut().zip(a.as_slice()) {
                *acc += v / baselines.len() as f64;
            }
        }
        for t in 0..attr.rows() {
            for (c, v) in attr.row(t).iter().enumerate() {
                let a = v.abs();
                sum[c] += a;
                sum_sq[c] += a * a;
            }
            count += 1;
        }
    }
    let n = count as f64;
    let mu: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let sigma: Vec<f64> = sum_sq
        .iter()
        .zip(&mu)
        .map(|(sq, m)| (sq / n - m * m).max(0.0).sqrt())
        .collect();
    Ok(FeatureScores::new(
        format!("ig-{}", kind.name()),
        data.feature_names.clone(),
        mu.clone(),
        mu,
        sigma,
        0.0,
    ))
}
