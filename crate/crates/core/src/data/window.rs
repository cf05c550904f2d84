use crate::data::dataset::{Sample, SequenceDataset};
use crate::data::records::RawRecords;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub const DEFAULT_WINDOW_LEN: usize = 30;
pub const DEFAULT_STRIDE: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct Windowed {
    pub dataset: SequenceDataset,
    /// Subjects with fewer rows than the window length.
    pub skipped: Vec<String>,
}

/// Sliding windows within each subject. A window's target is the target of
/// its last row.
pub fn window(records: &RawRecords, window_len: usize, stride: usize) -> Result<Windowed> {
    if window_len == 0 || stride == 0 {
        return Err(Error::config(format!(
            "window length and stride must be >= 1 (got {window_len}, {stride})"
        )));
    }
    let f = records.n_features();
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for s in &records.subjects {
        if s.len() < window_len {
            log::warn!(
                "subject `{}` has {} rows, shorter than window length {window_len}; skipped",
                s.subject_id,
                s.len()
            );
            skipped.push(s.subject_id.clone());
            continue;
        }
        let mut start = 0;
        while start + window_len <= s.len() {
            let mut x = Matrix::zeros(window_len, f);
            for t in 0..window_len {
                x.row_mut(t).copy_from_slice(s.features.row(start + t));
            }
            samples.push(Sample {
                subject_id: s.subject_id.clone(),
                x,
                y: s.targets[start + window_len - 1],
            });
            start += stride;
        }
    }
    let mut dataset = SequenceDataset::new(records.feature_names.clone(), window_len, samples)?;
    dataset.norm_stats = records.norm_stats.clone();
    Ok(Windowed { dataset, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::records::SubjectTrace;

    fn one_subject(rows: usize) -> RawRecords {
        RawRecords {
            feature_names: vec!["a".into()],
            subjects: vec![SubjectTrace {
                subject_id: "s".into(),
                timestamps: (0..rows).map(|t| t as f64).collect(),
                targets: (0..rows).map(|t| t as f64 * 10.0).collect(),
                features: Matrix::from_vec(rows, 1, (0..rows).map(|t| t as f64).collect()),
            }],
            norm_stats: vec![],
        }
    }

    #[test]
    fn window_counts() {
        assert_eq!(window(&one_subject(10), 5, 5).unwrap().dataset.len(), 2);
        assert_eq!(window(&one_subject(10), 5, 1).unwrap().dataset.len(), 6);
        let short = window(&one_subject(4), 5, 1).unwrap();
        assert_eq!(short.dataset.len(), 0);
        assert_eq!(short.skipped, vec!["s".to_string()]);
    }

    #[test]
    fn target_comes_from_last_row() {
        let w = window(&one_subject(10), 5, 5).unwrap();
        assert_eq!(w.dataset.samples[0].y, 40.0);
        assert_eq!(w.dataset.samples[1].y, 90.0);
        assert_eq!(w.dataset.samples[1].x.column(0), vec![5.0, 6.0, 7.0, 8.0, 9.0]);
    }

    #[test]
    fn windows_never_cross_subjects() {
        let mut r = one_subject(7);
        let mut other = r.subjects[0].clone();
        other.subject_id = "t".into();
        r.subjects.push(other);
        let w = window(&r, 5, 1).unwrap();
        assert_eq!(w.dataset.len(), 6);
        assert!(w.dataset.samples.iter().all(|s| s.x.column(0)[0] <= 2.0));
    }

    #[test]
    fn zero_parameters_rejected() {
        assert!(window(&one_subject(4), 0, 1).is_err());
        assert!(window(&one_subject(4), 2, 0).is_err());
    }
}
