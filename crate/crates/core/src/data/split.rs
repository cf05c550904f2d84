use crate::data::dataset::SequenceDataset;
use crate::error::{Error, Result};

/// One leave-one-subject-out fold.
#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub subject: String,
    pub train: SequenceDataset,
    pub test: SequenceDataset,
}

/// One fold per subject, ordered by subject id.
pub fn loocv_splits(dataset: &SequenceDataset) -> Result<Vec<Fold>> {
    let subjects = dataset.subjects();
    if subjects.len() < 2 {
        return Err(Error::data(format!(
            "leave-one-subject-out needs at least 2 subjects, found {}",
            subjects.len()
        )));
    }
    Ok(subjects
        .into_iter()
        .map(|subject| {
            let train = dataset.filter(|s| s.subject_id != subject);
            let test = dataset.filter(|s| s.subject_id == subject);
            Fold { subject, train, test }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{synth_generate, SynthConfig};

    fn dataset(n_subjects: usize) -> SequenceDataset {
        synth_generate(&SynthConfig {
            n_subjects,
            windows_per_subject: 3,
            window_len: 4,
            n_features: 2,
            relevant: vec![0],
            weights: vec![1.0],
            noise_std: 0.1,
            seed: 1,
            ar_coefficient: 0.9,
        })
        .unwrap()
        .dataset
    }

    #[test]
    fn one_fold_per_subject_with_partition() {
        let ds = dataset(3);
        let folds = loocv_splits(&ds).unwrap();
        assert_eq!(folds.len(), 3);
        let mut all_test = Vec::new();
        for fold in &folds {
            assert!(fold.train.samples.iter().all(|s| s.subject_id != fold.subject));
            assert!(fold.test.samples.iter().all(|s| s.subject_id == fold.subject));
            assert_eq!(fold.train.len() + fold.test.len(), ds.len());
            all_test.extend(fold.test.samples.iter().cloned());
        }
        assert_eq!(all_test, ds.samples);
        assert_eq!(folds.iter().map(|f| f.subject.as_str()).collect::<Vec<_>>(), vec!["s01", "s02", "s03"]);
    }

    #[test]
    fn single_subject_is_rejected() {
        assert!(matches!(loocv_splits(&dataset(1)), Err(Error::Data(_))));
    }
}
