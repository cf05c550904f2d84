use crate::data::dataset::SubjectNormStats;
use crate::data::records::RawRecords;
use crate::error::{Error, Result};

/// Spread below which a feature is treated as constant within a subject.
pub const CONSTANT_STD: f64 = 1e-12;

/// Per-subject, per-feature z-scoring with the population standard deviation.
///
/// Constant features are shifted to zero and flagged in the returned stats.
pub fn subject_normalize(records: &RawRecords) -> Result<RawRecords> {
    let f = records.n_features();
    let mut out = records.clone();
    out.norm_stats.clear();
    for subject in &mut out.subjects {
        let n = subject.len();
        if n < 2 {
            return Err(Error::data(format!(
                "subject `{}` has {n} row(s); normalization needs at least 2",
                subject.subject_id
            )));
        }
        let mut mean = vec![0.0; f];
        for r in 0..n {
            for (m, v) in mean.iter_mut().zip(subject.features.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; f];
        for r in 0..n {
            for ((acc, v), m) in var.iter_mut().zip(subject.features.row(r)).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let std: Vec<f64> = var.iter().map(|v| (v / n as f64).sqrt()).collect();
        let constant: Vec<bool> = std.iter().map(|&s| s < CONSTANT_STD).collect();
        for r in 0..n {
            let row = subject.features.row_mut(r);
            for c in 0..f {
                row[c] = if constant[c] { 0.0 } else { (row[c] - mean[c]) / std[c] };
            }
        }
        out.norm_stats.push(SubjectNormStats {
            subject_id: subject.subject_id.clone(),
            mean,
            std,
            constant,
        });
    }
    Ok(out)
}
