//! Sequence-regression network: LSTM layer, dense head, BPTT, AdamW, training.

pub mod adamw;
pub mod loss;
pub mod lstm;
pub mod train;
pub mod weights;

pub use adamw::{adamw_step, AdamWConfig, AdamWState};
pub use loss::{smooth_l1, smooth_l1_grad};
pub use lstm::{backward, backward_invocations, ForwardOutput, Gradients, LstmRegressor, ModelDims};
pub use train::{predict_mae, train, TrainConfig, TrainOutcome};

use crate::error::Result;
use crate::tensor::Matrix;

/// Anything that maps a `T × F` sequence to a scalar.
pub trait Regressor {
    fn input_dim(&self) -> usize;
    fn predict(&self, x: &Matrix) -> Result<f64>;
}

/// A regressor that can also report `∂prediction/∂x`.
pub trait Differentiable: Regressor {
    fn input_gradient(&self, x: &Matrix) -> Result<(f64, Matrix)>;
}

impl Regressor for LstmRegressor {
    fn input_dim(&self) -> usize {
        self.dims.input
    }

    fn predict(&self, x: &Matrix) -> Result<f64> {
        LstmRegressor::predict(self, x)
    }
}

impl Differentiable for LstmRegressor {
    fn input_gradient(&self, x: &Matrix) -> Result<(f64, Matrix)> {
        LstmRegressor::input_gradient(self, x)
    }
}

/// Adapts a closure into a [`Regressor`]; handy for hand-built models.
pub struct FnRegressor<F> {
    input_dim: usize,
    f: F,
}

impl<F: Fn(&Matrix) -> f64> FnRegressor<F> {
    pub fn new(input_dim: usize, f: F) -> Self {
        Self { input_dim, f }
    }
}

impl<F: Fn(&Matrix) -> f64> Regressor for FnRegressor<F> {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn predict(&self, x: &Matrix) -> Result<f64> {
        Ok((self.f)(x))
    }
}
