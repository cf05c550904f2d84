//! AdamW with decoupled weight decay.
//!
//! Each step first shrinks the weights, `θ ← θ·(1 − lr·λ)`, then applies the
//! bias-corrected Adam update. The decay never enters the moment estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::lstm::{Gradients, LstmRegressor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamWState {
    pub fn new(model: &LstmRegressor) -> Self {
        let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
        Self {
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// Scalar AdamW update on one slice of parameters.
fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &AdamWConfig,
    bias1: f64,
    bias2: f64,
) {
    let decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
    for k in 0..params.len() {
        let g = grads[k];
        m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
        v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[k] / bias1;
        let v_hat = v[k] / bias2;
        params[k] = params[k] * decay - cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

pub fn adamw_step(
    model: &mut LstmRegressor,
    grads: &Gradients,
    state: &mut AdamWState,
    cfg: &AdamWConfig,
) -> Result<()> {
    let grad_tensors = grads.tensors();
    let params = model.tensors_mut();
    if state.m.len() != params.len()
        || params
            .iter()
            .zip(&state.m)
            .zip(grad_tensors.iter())
            .any(|((p, m), g)| p.len() != m.len() || p.len() != g.len())
    {
        return Err(Error::config("optimizer state or gradients do not match the model shape"));
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);
    for (((p, g), m), v) in params
        .into_iter()
        .zip(grad_tensors)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        update_slice(p, g, m, v, cfg, bias1, bias2);
    }
    model.validate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::lstm::ModelDims;

    fn tiny() -> LstmRegressor {
        LstmRegressor::init(ModelDims::new(2, 3, 2), 7).unwrap()
    }

    #[test]
    fn zero_gradients_without_decay_leave_parameters_unchanged() {
        let mut model = tiny();
        let before = model.clone();
        let grads = Gradients::zeros_like(&model);
        let mut state = AdamWState::new(&model);
        let cfg = AdamWConfig {
            weight_decay: 0.0,
            ..AdamWConfig::default()
        };
        adamw_step(&mut model, &grads, &mut state, &cfg).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn zero_gradients_apply_pure_decoupled_decay() {
        let mut model = tiny();
        let before = model.clone();
        let grads = Gradients::zeros_like(&model);
        let mut state = AdamWState::new(&model);
        let cfg = AdamWConfig {
            weight_decay: 0.01,
            learning_rate: 1e-3,
            ..AdamWConfig::default()
        };
        adamw_step(&mut model, &grads, &mut state, &cfg).unwrap();
        for (a, b) in model.tensors().iter().zip(before.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y * (1.0 - 1e-5)).abs() <= 1e-15 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn scalar_steps_match_hand_stepped_oracle() {
        // Oracle: Adam recurrences written out for g = 1 on every step.
        let cfg = AdamWConfig::default();
        let (b1, b2, lr, eps, wd) = (0.9f64, 0.999f64, 1e-3f64, 1e-8f64, 0.01f64);
        let mut theta = 0.5f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        let mut expected = Vec::new();
        for t in 1..=3 {
            m = b1 * m + (1.0 - b1);
            v = b2 * v + (1.0 - b2);
            let m_hat = m / (1.0 - b1.powi(t));
            let v_hat = v / (1.0 - b2.powi(t));
            theta = theta - lr * wd * theta - lr * m_hat / (v_hat.sqrt() + eps);
            expected.push(theta);
        }
        // With g constant, m̂ = v̂ = 1, so each step moves by lr/(1+eps) plus decay.
        let mut params = [0.5f64];
        let (mut ms, mut vs) = ([0.0f64], [0.0f64]);
        for (t, want) in (1..=3).zip(expected) {
            let bias1 = 1.0 - cfg.beta1.powi(t);
            let bias2 = 1.0 - cfg.beta2.powi(t);
            update_slice(&mut params, &[1.0], &mut ms, &mut vs, &cfg, bias1, bias2);
            assert!((params[0] - want).abs() < 1e-15, "step {t}: {} vs {want}", params[0]);
        }
        let first_step = 0.5 - 0.5 * lr * wd - lr / (1.0 + eps);
        assert!((first_step - 0.498995).abs() < 1e-6);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut model = tiny();
        let other = LstmRegressor::init(ModelDims::new(3, 3, 2), 1).unwrap();
        let grads = Gradients::zeros_like(&other);
        let mut state = AdamWState::new(&model);
        assert!(adamw_step(&mut model, &grads, &mut state, &AdamWConfig::default()).is_err());
    }
}
