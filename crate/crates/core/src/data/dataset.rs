use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// One window: `T × F` inputs and a scalar target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub subject_id: String,
    pub x: Matrix,
    pub y: f64,
}

/// Per-subject z-score statistics for each feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectNormStats {
    pub subject_id: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features whose within-subject spread was below the constant threshold.
    pub constant: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDataset {
    pub feature_names: Vec<String>,
    pub window_len: usize,
    pub samples: Vec<Sample>,
    #[serde(default)]
    pub norm_stats: Vec<SubjectNormStats>,
}

impl SequenceDataset {
    /// Builds a dataset after checking that every sample is `window_len × F`.
    pub fn new(feature_names: Vec<String>, window_len: usize, samples: Vec<Sample>) -> Result<Self> {
        let ds = Self {
            feature_names,
            window_len,
            samples,
            norm_stats: Vec::new(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.feature_names.len();
        for (i, s) in self.samples.iter().enumerate() {
            if s.x.shape() != (self.window_len, f) {
                return Err(Error::data(format!(
                    "sample {i} has shape {:?}, expected ({}, {f})",
                    s.x.shape(),
                    self.window_len
                )));
            }
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distinct subject ids, sorted.
    pub fn subjects(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.samples.iter().map(|s| s.subject_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn inputs(&self) -> Vec<&Matrix> {
        self.samples.iter().map(|s| &s.x).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }

    /// Keeps samples matching `keep`, preserving order and metadata.
    pub fn filter(&self, keep: impl Fn(&Sample) -> bool) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            window_len: self.window_len,
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
            norm_stats: self.norm_stats.clone(),
        }
    }

    pub fn with_samples(&self, samples: Vec<Sample>) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            window_len: self.window_len,
            samples,
            norm_stats: self.norm_stats.clone(),
        }
    }

    /// Per-feature mean over every sample and timestep.
    pub fn feature_means(&self) -> Vec<f64> {
        let f = self.n_features();
        let mut sums = vec![0.0; f];
        let mut count = 0usize;
        for s in &self.samples {
            for t in 0..s.x.rows() {
                for (acc, v) in sums.iter_mut().zip(s.x.row(t)) {
                    *acc += v;
                }
                count += 1;
            }
        }
        if count > 0 {
            sums.iter_mut().for_each(|v| *v /= count as f64);
        }
        sums
    }

    /// SHA-256 over feature names, window length, and every sample's bytes.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for name in &self.feature_names {
            hasher.update(name.as_bytes());
            hasher.update([0u8]);
        }
        hasher.update((self.window_len as u64).to_le_bytes());
        for s in &self.samples {
            hasher.update(s.subject_id.as_bytes());
            hasher.update([0u8]);
            for v in s.x.as_slice() {
                hasher.update(v.to_le_bytes());
            }
            hasher.update(s.y.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}
