//! Synthetic sequences with a known set of relevant features.
//!
//! Every feature is an independent stationary AR(1) process with unit
//! marginal variance. Each row's target is the weighted sum, over the relevant
//! features, of the trailing `T`-row mean, plus Gaussian noise. Windows are cut
//! with stride `T`, so a window's target is exactly the weighted mean of its own
//! relevant columns plus noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::dataset::SequenceDataset;
use crate::data::records::{RawRecords, SubjectTrace};
use crate::data::window::window;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

fn default_ar() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub windows_per_subject: usize,
    pub window_len: usize,
    pub n_features: usize,
    /// Indices of features that drive the target.
    pub relevant: Vec<usize>,
    /// One weight per entry of `relevant`.
    pub weights: Vec<f64>,
    pub noise_std: f64,
    pub seed: u64,
    #[serde(default = "default_ar")]
    pub ar_coefficient: f64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 || self.windows_per_subject == 0 || self.window_len == 0 || self.n_features == 0 {
            return Err(Error::config("synthetic sizes must all be >= 1"));
        }
        if self.relevant.len() != self.weights.len() {
            return Err(Error::config(format!(
                "{} relevant features but {} weights",
                self.relevant.len(),
                self.weights.len()
            )));
        }
        if let Some(&bad) = self.relevant.iter().find(|&&f| f >= self.n_features) {
            return Err(Error::config(format!(
                "relevant feature {bad} out of range for {} features",
                self.n_features
            )));
        }
        let mut sorted = self.relevant.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.relevant.len() {
            return Err(Error::config("relevant feature indices must be distinct"));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::config("noise_std must be finite and >= 0"));
        }
        if !(self.ar_coefficient.abs() < 1.0) {
            return Err(Error::config("ar_coefficient must lie in (-1, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub dataset: SequenceDataset,
    /// The raw per-row trace the windows were cut from (CSV-exportable).
    pub records: RawRecords,
    /// Sorted ground-truth relevant feature indices.
    pub relevant: Vec<usize>,
}

pub fn synth_generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let f = config.n_features;
    let t_len = config.window_len;
    let rows = config.windows_per_subject * t_len;
    let phi = config.ar_coefficient;
    let innovation = (1.0 - phi * phi).sqrt();
    let width = config.n_subjects.to_string().len().max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };

    let mut subjects = Vec::with_capacity(config.n_subjects);
    for s in 0..config.n_subjects {
        let mut features = Matrix::zeros(rows, f);
        for c in 0..f {
            let mut prev = normal();
            features.set(0, c, prev);
            for r in 1..rows {
                prev = phi * prev + innovation * normal();
                features.set(r, c, prev);
            }
        }
        let mut targets = Vec::with_capacity(rows);
        for r in 0..rows {
            let start = (r + 1).saturating_sub(t_len);
            let n = (r + 1 - start) as f64;
            let mut y = 0.0;
            for (&c, &w) in config.relevant.iter().zip(&config.weights) {
                let mut sum = 0.0;
                for k in start..=r {
                    sum += features.get(k, c);
                }
                y += w * (sum / n);
            }
            let noise = normal();
            targets.push(y + config.noise_std * noise);
        }
        subjects.push(SubjectTrace {
            subject_id: format!("s{:0width$}", s + 1),
            timestamps: (0..rows).map(|r| r as f64).collect(),
            targets,
            features,
        });
    }
    let records = RawRecords {
        feature_names: (0..f).map(|c| format!("f{c:02}")).collect(),
        subjects,
        norm_stats: Vec::new(),
    };
    let dataset = window(&records, t_len, t_len)?.dataset;
    let mut relevant = config.relevant.clone();
    relevant.sort_unstable();
    Ok(SynthOutput {
        dataset,
        records,
        relevant,
    })
}
