//! KernelSHAP and exact Shapley enumeration over whole-feature coalitions.
//!
//! A coalition `S` keeps the listed features and replaces every other feature,
//! at all timesteps, by its background mean. `v(S)` is the model's prediction
//! on that masked sequence.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attribution::scores::FeatureScores;
use crate::data::SequenceDataset;
use crate::error::{Error, Result};
use crate::nn::Regressor;
use crate::tensor::Matrix;

/// Largest feature count for exact enumeration and full-enumeration KernelSHAP.
pub const MAX_EXACT_FEATURES: usize = 12;

fn masked(x: &Matrix, background: &[f64], mask: u64) -> Matrix {
    let mut out = x.clone();
    for t in 0..out.rows() {
        let row = out.row_mut(t);
        for (f, v) in row.iter_mut().enumerate() {
            if mask >> f & 1 == 0 {
                *v = background[f];
            }
        }
    }
    out
}

fn coalition_value<M: Regressor + ?Sized>(model: &M, x: &Matrix, background: &[f64], mask: u64) -> Result<f64> {
    let v = model.predict(&masked(x, background, mask))?;
    if !v.is_finite() {
        return Err(Error::Numeric {
            tensor: "coalition_value".into(),
        });
    }
    Ok(v)
}

fn check_inputs<M: Regressor + ?Sized>(model: &M, x: &Matrix, background: &[f64]) -> Result<usize> {
    let f = x.cols();
    if model.input_dim() != f || background.len() != f {
        return Err(Error::config(format!(
            "model expects {} features, sample has {f}, background has {}",
            model.input_dim(),
            background.len()
        )));
    }
    if f == 0 || f > 63 {
        return Err(Error::config(format!("unsupported feature count {f}")));
    }
    Ok(f)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel weight of a coalition of size `s` out of `f`.
pub fn shapley_kernel_weight(f: usize, s: usize) -> f64 {
    (f - 1) as f64 / (binomial(f, s) * s as f64 * (f - s) as f64)
}

/// Exact Shapley values by enumerating all `2^F` coalitions.
pub fn exact_shapley<M: Regressor + ?Sized>(model: &M, x: &Matrix, background: &[f64]) -> Result<Vec<f64>> {
    let f = check_inputs(model, x, background)?;
    if f > MAX_EXACT_FEATURES {
        return Err(Error::config(format!(
            "exact Shapley enumeration is limited to {MAX_EXACT_FEATURES} features, got {f}"
        )));
    }
    let n_masks = 1u64 << f;
    let values = (0..n_masks)
        .map(|m| coalition_value(model, x, background, m))
        .collect::<Result<Vec<_>>>()?;
    // Weight for adding a feature to a coalition of size s: s!(F−s−1)!/F!.
    let mut factor = vec![0.0; f];
    for (s, w) in factor.iter_mut().enumerate() {
        *w = 1.0 / (binomial(f - 1, s) * f as f64);
    }
    let mut phi = vec![0.0; f];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1u64 << i;
        for m in 0..n_masks {
            if m & bit == 0 {
                let s = m.count_ones() as usize;
                *p += factor[s] * (values[(m | bit) as usize] - values[m as usize]);
            }
        }
    }
    Ok(phi)
}

/// Weighted coalitions (excluding the empty and full sets).
fn enumerate_coalitions(f: usize) -> Vec<(u64, f64)> {
    let full = (1u64 << f) - 1;
    (1..full)
        .map(|m| (m, shapley_kernel_weight(f, m.count_ones() as usize)))
        .collect()
}

/// Samples `budget` coalitions in complementary pairs: a size `s` drawn with
/// probability ∝ `(F−1)/(s(F−s))`, then a uniform subset of that size.
/// Repeats merge by summing weights.
fn sample_coalitions(f: usize, budget: usize, seed: u64) -> Vec<(u64, f64)> {
    let full = (1u64 << f) - 1;
    let size_weights: Vec<f64> = (1..f).map(|s| 1.0 / (s * (f - s)) as f64).collect();
    let total: f64 = size_weights.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<u64, f64> = BTreeMap::new();
    let mut features: Vec<usize> = (0..f).collect();
    let mut drawn = 0;
    while drawn < budget {
        let mut u = rng.random::<f64>() * total;
        let mut size = f - 1;
        for (k, w) in size_weights.iter().enumerate() {
            if u < *w {
                size = k + 1;
                break;
            }
            u -= w;
        }
        let (chosen, _) = features.partial_shuffle(&mut rng, size);
        let mask = chosen.iter().fold(0u64, |m, &i| m | 1 << i);
        *counts.entry(mask).or_insert(0.0) += 1.0;
        *counts.entry(full ^ mask).or_insert(0.0) += 1.0;
        drawn += 2;
    }
    counts.into_iter().collect()
}

/// Solves the efficiency-constrained weighted least squares for φ.
fn solve_constrained(f: usize, coalitions: &[(u64, f64)], values: &[f64], v_empty: f64, v_full: f64) -> Result<Vec<f64>> {
    let delta = v_full - v_empty;
    if f == 1 {
        return Ok(vec![delta]);
    }
    // Eliminate the last feature: φ_last = Δ − Σ_{k<last} φ_k.
    let last = f - 1;
    let k = f - 1;
    let mut ata = DMatrix::<f64>::zeros(k, k);
    let mut aty = DVector::<f64>::zeros(k);
    let mut row = vec![0.0; k];
    for (&(mask, w), &v) in coalitions.iter().zip(values) {
        let z_last = (mask >> last & 1) as f64;
        for (j, r) in row.iter_mut().enumerate() {
            *r = (mask >> j & 1) as f64 - z_last;
        }
        let y = v - v_empty - z_last * delta;
        for a in 0..k {
            if row[a] == 0.0 {
                continue;
            }
            aty[a] += w * row[a] * y;
            for b in 0..k {
                ata[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    let chol = ata.clone().cholesky().ok_or_else(|| {
        Error::Solver("KernelSHAP normal equations are singular; increase shap_coalitions".into())
    })?;
    let l = chol.l();
    let diag: Vec<f64> = (0..k).map(|i| l[(i, i)].abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 1e-7 * max) {
        return Err(Error::Solver(
            "KernelSHAP normal equations are ill-conditioned; increase shap_coalitions".into(),
        ));
    }
    let sol = chol.solve(&aty);
    let mut phi: Vec<f64> = sol.iter().copied().collect();
    let rest: f64 = phi.iter().sum();
    phi.push(delta - rest);
    Ok(phi)
}

/// KernelSHAP for one sample.
///
/// Uses every coalition with exact kernel weights when `F ≤ 12` and
/// `n_coalitions ≥ 2^F − 2`; otherwise samples `n_coalitions` coalitions.
/// The empty and full coalitions enter as exact constraints, so
/// `Σ φ = v(full) − v(∅)`.
pub fn kernel_shap<M: Regressor + ?Sized>(
    model: &M,
    x: &Matrix,
    background: &[f64],
    n_coalitions: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let f = check_inputs(model, x, background)?;
    let full = (1u64 << f) - 1;
    let v_empty = coalition_value(model, x, background, 0)?;
    let v_full = coalition_value(model, x, background, full)?;
    if f == 1 {
        return Ok(vec![v_full - v_empty]);
    }
    let enumerate = f <= MAX_EXACT_FEATURES && n_coalitions as u64 >= full - 1;
    if !enumerate && n_coalitions < 2 * f {
        return Err(Error::config(format!(
            "KernelSHAP needs at least 2F = {} coalitions, got {n_coalitions}",
            2 * f
        )));
    }
    let coalitions = if enumerate {
        enumerate_coalitions(f)
    } else {
        sample_coalitions(f, n_coalitions, seed)
    };
    let values = coalitions
        .iter()
        .map(|&(m, _)| coalition_value(model, x, background, m))
        .collect::<Result<Vec<_>>>()?;
    solve_constrained(f, &coalitions, &values, v_empty, v_full)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapSettings {
    pub n_coalitions: usize,
    /// Samples explained per call, spread evenly over the dataset.
    pub max_samples: usize,
    pub seed: u64,
}

impl Default for ShapSettings {
    fn default() -> Self {
        Self {
            n_coalitions: 2048,
            max_samples: 64,
            seed: 0,
        }
    }
}

/// Evenly spaced sample indices, at most `max` of them.
pub fn explained_indices(n: usize, max: usize) -> Vec<usize> {
    if max == 0 || n <= max {
        return (0..n).collect();
    }
    (0..max).map(|i| i * n / max).collect()
}

/// Global score per feature: mean `|φ_f|` over explained samples, with the
/// dataset's feature means as background.
pub fn kernel_shap_scores<M: Regressor + ?Sized>(
    model: &M,
    data: &SequenceDataset,
    settings: &ShapSettings,
) -> Result<FeatureScores> {
    if data.is_empty() {
        return Err(Error::data("KernelSHAP needs a non-empty dataset"));
    }
    let background = data.feature_means();
    let idx = explained_indices(data.len(), settings.max_samples);
    let f = data.n_features();
    let mut sum = vec![0.0; f];
    let mut sum_sq = vec![0.0; f];
    for (k, &i) in idx.iter().enumerate() {
        let phi = kernel_shap(model, &data.samples[i].x, &background, settings.n_coalitions, settings.seed.wrapping_add(k as u64))?;
        for c in 0..f {
            sum[c] += phi[c].abs();
            sum_sq[c] += phi[c] * phi[c];
        }
    }
    let n = idx.len() as f64;
    let mu: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let sigma = sum_sq.iter().zip(&mu).map(|(sq, m)| (sq / n - m * m).max(0.0).sqrt()).collect();
    Ok(FeatureScores::new("kernelshap", data.feature_names.clone(), mu.clone(), mu, sigma, 0.0))
}
