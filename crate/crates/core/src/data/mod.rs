//! Ingestion, subject-wise normalization, windowing, splits and synthesis.

pub mod dataset;
pub mod normalize;
pub mod records;
pub mod split;
pub mod synth;
pub mod window;

use std::path::Path;

pub use dataset::{Sample, SequenceDataset, SubjectNormStats};
pub use normalize::subject_normalize;
pub use records::{load_csv, read_csv, save_csv, write_csv, CsvSchema, RawRecords, SubjectTrace};
pub use split::{loocv_splits, Fold};
pub use synth::{synth_generate, SynthConfig, SynthOutput};
pub use window::{window, Windowed, DEFAULT_STRIDE, DEFAULT_WINDOW_LEN};

use crate::error::Result;

/// Load, normalize per subject, and window a CSV file.
pub fn prepare_csv(path: &Path, schema: &CsvSchema, window_len: usize, stride: usize) -> Result<SequenceDataset> {
    let raw = load_csv(path, schema)?;
    let normalized = subject_normalize(&raw)?;
    Ok(window(&normalized, window_len, stride)?.dataset)
}
