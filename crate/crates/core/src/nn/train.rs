//! Mini-batch training with early stopping on validation MAE.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::SequenceDataset;
use crate::error::{Error, Result};
use crate::nn::adamw::{adamw_step, AdamWConfig, AdamWState};
use crate::nn::lstm::{backward, LstmRegressor, ModelDims};
use crate::tensor::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Windows per mini-batch.
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub smooth_l1_beta: f64,
    pub weight_decay: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Fraction of each subject's trailing windows held out for early stopping.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 460,
            max_epochs: 100,
            patience: 10,
            smooth_l1_beta: 1.0,
            weight_decay: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if self.patience == 0 {
            return Err(Error::config("patience must be >= 1"));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("max_epochs must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::config("validation_fraction must lie in [0, 1)"));
        }
        if !(self.smooth_l1_beta > 0.0) {
            return Err(Error::config("smooth_l1_beta must be > 0"));
        }
        Ok(())
    }

    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
            weight_decay: self.weight_decay,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LstmRegressor,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_validation_mae: f64,
    /// Whether early stopping had a held-out split or fell back to training MAE.
    pub used_validation_split: bool,
}

/// Chronological split: the last `fraction` of each subject's windows.
pub fn validation_split(dataset: &SequenceDataset, fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let mut by_subject: Vec<(&str, Vec<usize>)> = Vec::new();
    for (i, s) in dataset.samples.iter().enumerate() {
        match by_subject.iter_mut().find(|(id, _)| *id == s.subject_id) {
            Some((_, idx)) => idx.push(i),
            None => by_subject.push((&s.subject_id, vec![i])),
        }
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (_, idx) in by_subject {
        let n_val = (idx.len() as f64 * fraction).floor() as usize;
        let cut = idx.len() - n_val;
        train.extend_from_slice(&idx[..cut]);
        val.extend_from_slice(&idx[cut..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn mae_on(model: &LstmRegressor, dataset: &SequenceDataset, idx: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for &i in idx {
        let s = &dataset.samples[i];
        total += (model.predict(&s.x)? - s.y).abs();
    }
    Ok(total / idx.len() as f64)
}

pub fn train(dataset: &SequenceDataset, dims: ModelDims, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if dims.input != dataset.n_features() {
        return Err(Error::config(format!(
            "model input dim {} does not match dataset feature count {}",
            dims.input,
            dataset.n_features()
        )));
    }
    let (train_idx, val_idx) = validation_split(dataset, config.validation_fraction);
    if train_idx.is_empty() {
        return Err(Error::data("training split is empty"));
    }
    let (monitor_idx, used_validation_split) = if val_idx.is_empty() {
        log::debug!("no validation windows; early stopping monitors training MAE");
        (train_idx.clone(), false)
    } else {
        (val_idx, true)
    };

    let mut model = LstmRegressor::init(dims, config.seed)?;
    let mut state = AdamWState::new(&model);
    let adam = config.adamw();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0f_ba7c);
    let mut order = train_idx;

    let mut best = model.clone();
    let mut best_mae = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut epochs_run = 0;
    let mut xs: Vec<&Matrix> = Vec::with_capacity(config.batch_size);
    let mut ys: Vec<f64> = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            xs.clear();
            ys.clear();
            for &i in chunk {
                xs.push(&dataset.samples[i].x);
                ys.push(dataset.samples[i].y);
            }
            let grads = backward(&model, &xs, &ys, config.smooth_l1_beta, false)?;
            adamw_step(&mut model, &grads, &mut state, &adam)?;
        }
        epochs_run = epoch + 1;
        let mae = mae_on(&model, dataset, &monitor_idx)?;
        if !mae.is_finite() {
            return Err(Error::Numeric {
                tensor: "validation_mae".into(),
            });
        }
        if mae < best_mae {
            best_mae = mae;
            best = model.clone();
            best_epoch = epochs_run;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        model: best,
        epochs_run,
        best_epoch,
        best_validation_mae: best_mae,
        used_validation_split,
    })
}

/// Mean absolute error of `model` over every sample of `dataset`.
pub fn predict_mae<M: crate::nn::Regressor + ?Sized>(model: &M, dataset: &SequenceDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::data("cannot compute MAE on an empty dataset"));
    }
    let mut total = 0.0;
    for s in &dataset.samples {
        total += (model.predict(&s.x)? - s.y).abs();
    }
    Ok(total / dataset.len() as f64)
}
