//! Top-k feature selection and column subsetting.

use serde::{Deserialize, Serialize};

use crate::attribution::FeatureScores;
use crate::data::{Sample, SequenceDataset, SubjectNormStats};
use crate::error::{Error, Result};

fn default_k_percents() -> Vec<u32> {
    vec![10, 20, 30, 40]
}
fn default_repeats() -> usize {
    25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKConfig {
    #[serde(default = "default_k_percents")]
    pub k_percents: Vec<u32>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TopKConfig {
    fn default() -> Self {
        Self {
            k_percents: default_k_percents(),
            repeats: default_repeats(),
            seed: 0,
        }
    }
}

impl TopKConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_percents.is_empty() {
            return Err(Error::config("k_percents must not be empty"));
        }
        if let Some(k) = self.k_percents.iter().find(|k| **k == 0 || **k > 100) {
            return Err(Error::config(format!("k must be in (0, 100], got {k}")));
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats must be >= 1"));
        }
        Ok(())
    }
}

/// Number of features kept at `k` percent: `ceil(k·F/100)`, at least one.
pub fn top_k_count(n_features: usize, k_percent: u32) -> Result<usize> {
    if k_percent == 0 || k_percent > 100 {
        return Err(Error::config(format!("k must be in (0, 100], got {k_percent}")));
    }
    let count = (k_percent as usize * n_features).div_ceil(100);
    Ok(count.max(1).min(n_features))
}

/// The leading `top_k_count` entries of the ranking, in rank order.
pub fn select_top_k(scores: &FeatureScores, k_percent: u32) -> Result<Vec<usize>> {
    let count = top_k_count(scores.n_features(), k_percent)?;
    Ok(scores.ranking[..count].to_vec())
}

/// Keeps the given columns, in ascending index order.
pub fn subset_dataset(dataset: &SequenceDataset, features: &[usize]) -> Result<SequenceDataset> {
    if features.is_empty() {
        return Err(Error::config("feature subset must not be empty"));
    }
    let f = dataset.n_features();
    let mut cols = features.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if let Some(bad) = cols.iter().find(|&&c| c >= f) {
        return Err(Error::config(format!("feature index {bad} out of range for {f} features")));
    }
    let pick = |v: &[f64]| cols.iter().map(|&c| v[c]).collect::<Vec<_>>();
    Ok(SequenceDataset {
        feature_names: cols.iter().map(|&c| dataset.feature_names[c].clone()).collect(),
        window_len: dataset.window_len,
        samples: dataset
            .samples
            .iter()
            .map(|s| Sample {
                subject_id: s.subject_id.clone(),
                x: s.x.select_columns(&cols),
                y: s.y,
            })
            .collect(),
        norm_stats: dataset
            .norm_stats
            .iter()
            .map(|n| SubjectNormStats {
                subject_id: n.subject_id.clone(),
                mean: pick(&n.mean),
                std: pick(&n.std),
                constant: cols.iter().map(|&c| n.constant[c]).collect(),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;
    use proptest::prelude::*;

    #[test]
    fn counts() {
        assert_eq!(top_k_count(20, 10).unwrap(), 2);
        assert_eq!(top_k_count(15, 10).unwrap(), 2);
        assert_eq!(top_k_count(5, 10).unwrap(), 1);
        assert_eq!(top_k_count(15, 100).unwrap(), 15);
        assert!(top_k_count(15, 0).is_err());
        assert!(top_k_count(15, 101).is_err());
    }

    fn dataset() -> SequenceDataset {
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        SequenceDataset::new(
            vec!["a".into(), "b".into(), "c".into()],
            2,
            vec![Sample {
                subject_id: "s".into(),
                x,
                y: 1.0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn subsets() {
        let ds = dataset();
        assert_eq!(subset_dataset(&ds, &[0, 1, 2]).unwrap(), ds);
        let one = subset_dataset(&ds, &[0]).unwrap();
        assert_eq!(one.n_features(), 1);
        assert_eq!(one.samples[0].x.column(0), vec![1.0, 4.0]);
        let two = subset_dataset(&ds, &[2, 0]).unwrap();
        assert_eq!(two.feature_names, vec!["a", "c"]);
        assert_eq!(two.samples[0].x.row(0), &[1.0, 3.0]);
        assert!(subset_dataset(&ds, &[]).is_err());
        assert!(subset_dataset(&ds, &[3]).is_err());
    }

    proptest! {
        #[test]
        fn nested_across_k(scores in prop::collection::vec(-5.0f64..5.0, 1..40), k1 in 1u32..=100, k2 in 1u32..=100) {
            let names = (0..scores.len()).map(|i| format!("f{i}")).collect();
            let fs = FeatureScores::from_scores("t", names, scores);
            let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            let a = select_top_k(&fs, lo).unwrap();
            let b = select_top_k(&fs, hi).unwrap();
            prop_assert!(a.len() <= b.len());
            prop_assert_eq!(&b[..a.len()], &a[..]);
        }
    }
}
