//! Retrain-and-score evaluation of feature rankings under leave-one-subject-out.
//!
//! For every fold and repeat a full-feature model is trained on the training
//! subjects, every method ranks features on that training split, and for each
//! k a fresh model is trained on the selected columns and scored on the
//! held-out subject. All methods in one call share the folds, the full model
//! and the reduced-model seeds, so they differ only in the columns selected.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{compute_scores, AttributionConfig};
use crate::data::{loocv_splits, Fold, SequenceDataset};
use crate::error::{Error, Result};
use crate::evaluation::report::{hash_json, Cell, EvalReport, FoldRecord, RankingRecord, ReportMetadata};
use crate::evaluation::topk::{select_top_k, subset_dataset, TopKConfig};
use crate::nn::{predict_mae, train, ModelDims, TrainConfig};

fn default_hidden() -> usize {
    32
}
fn default_penult() -> usize {
    16
}

/// Hidden and penultimate widths; the input width follows the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_penult")]
    pub penult: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            hidden: default_hidden(),
            penult: default_penult(),
        }
    }
}

impl ModelSpec {
    pub fn dims(&self, input: usize) -> ModelDims {
        ModelDims::new(input, self.hidden, self.penult)
    }
}

/// splitmix64 finalizer; mixes `parts` into `base`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for &p in parts {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(p.wrapping_mul(0xd1b5_4a32_d192_ed03));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

const FULL_MODEL: u64 = 0;
const ATTRIBUTION: u64 = 1;
const REDUCED_MODEL: u64 = 2;

#[derive(Serialize)]
struct HashedConfig<'a> {
    methods: &'a [AttributionConfig],
    topk: &'a TopKConfig,
    train: &'a TrainConfig,
    model: &'a ModelSpec,
}

struct JobOutput {
    record: FoldRecord,
    cells: Vec<Cell>,
    rankings: Vec<RankingRecord>,
}

fn train_and_score(train_set: &SequenceDataset, test_set: &SequenceDataset, spec: &ModelSpec, cfg: &TrainConfig) -> std::result::Result<f64, String> {
    let outcome = train(train_set, spec.dims(train_set.n_features()), cfg).map_err(|e| e.to_string())?;
    let mae = predict_mae(&outcome.model, test_set).map_err(|e| e.to_string())?;
    if mae.is_finite() {
        Ok(mae)
    } else {
        Err(format!("non-finite test MAE {mae}"))
    }
}

fn run_job(
    fold_index: usize,
    fold: &Fold,
    repeat: usize,
    methods: &[AttributionConfig],
    topk: &TopKConfig,
    train_cfg: &TrainConfig,
    spec: &ModelSpec,
) -> JobOutput {
    let run_seed = derive_seed(topk.seed, &[repeat as u64]);
    let fold_key = fold_index as u64;
    let full_cfg = TrainConfig {
        seed: derive_seed(run_seed, &[fold_key, FULL_MODEL]),
        ..train_cfg.clone()
    };
    let reduced_cfg = TrainConfig {
        seed: derive_seed(run_seed, &[fold_key, REDUCED_MODEL]),
        ..train_cfg.clone()
    };
    let attribution_seed = derive_seed(run_seed, &[fold_key, ATTRIBUTION]);

    let mut record = FoldRecord {
        fold: fold.subject.clone(),
        repeat,
        train_fingerprint: fold.train.fingerprint(),
        test_fingerprint: fold.test.fingerprint(),
        attribution_fingerprint: String::new(),
        full_mae: None,
        full_error: None,
    };
    let mut cells = Vec::new();
    let mut rankings = Vec::new();
    let cell = |method: &str, k: u32, r: std::result::Result<f64, String>| Cell {
        method: method.to_string(),
        k,
        fold: fold.subject.clone(),
        repeat,
        mae: r.as_ref().ok().copied(),
        error: r.err(),
    };

    let full = train(&fold.train, spec.dims(fold.train.n_features()), &full_cfg);
    let model = match full {
        Ok(outcome) => {
            match predict_mae(&outcome.model, &fold.test) {
                Ok(m) if m.is_finite() => record.full_mae = Some(m),
                Ok(m) => record.full_error = Some(format!("non-finite test MAE {m}")),
                Err(e) => record.full_error = Some(e.to_string()),
            }
            outcome.model
        }
        Err(e) => {
            let msg = format!("full-feature training failed: {e}");
            record.full_error = Some(msg.clone());
            for m in methods {
                for &k in &topk.k_percents {
                    cells.push(cell(&m.label(), k, Err(msg.clone())));
                }
            }
            return JobOutput { record, cells, rankings };
        }
    };

    // The attribution input is the training split; its fingerprint is kept
    // so reports can show the held-out subject never reached selection.
    let attribution_data = &fold.train;
    record.attribution_fingerprint = attribution_data.fingerprint();
    let mut trained: HashMap<Vec<usize>, std::result::Result<f64, String>> = HashMap::new();
    for m in methods {
        let label = m.label();
        let scores = match compute_scores(&model, attribution_data, &m.with_seed(derive_seed(attribution_seed, &[m.seed]))) {
            Ok(s) => s,
            Err(e) => {
                for &k in &topk.k_percents {
                    cells.push(cell(&label, k, Err(format!("attribution failed: {e}"))));
                }
                continue;
            }
        };
        rankings.push(RankingRecord {
            method: label.clone(),
            fold: fold.subject.clone(),
            repeat,
            ranking: scores.ranking.clone(),
        });
        for &k in &topk.k_percents {
            let result = select_top_k(&scores, k).map_err(|e| e.to_string()).and_then(|mut sel| {
                sel.sort_unstable();
                if let Some(r) = trained.get(&sel) {
                    return r.clone();
                }
                let r = subset_dataset(&fold.train, &sel)
                    .and_then(|tr| subset_dataset(&fold.test, &sel).map(|te| (tr, te)))
                    .map_err(|e| e.to_string())
                    .and_then(|(tr, te)| train_and_score(&tr, &te, spec, &reduced_cfg));
                trained.insert(sel, r.clone());
                r
            });
            cells.push(cell(&label, k, result));
        }
    }
    JobOutput { record, cells, rankings }
}

/// Evaluates every method over all folds and repeats. `jobs` bounds the
/// number of concurrent fold × repeat cells; the result does not depend on it.
pub fn evaluate_methods(
    dataset: &SequenceDataset,
    methods: &[AttributionConfig],
    topk: &TopKConfig,
    train_cfg: &TrainConfig,
    spec: &ModelSpec,
    jobs: usize,
) -> Result<EvalReport> {
    topk.validate()?;
    train_cfg.validate()?;
    if methods.is_empty() {
        return Err(Error::config("no attribution methods configured"));
    }
    let mut labels = Vec::new();
    for m in methods {
        m.validate(dataset.n_features())?;
        let label = m.label();
        if labels.contains(&label) {
            return Err(Error::config(format!("duplicate method label {label:?}")));
        }
        labels.push(label);
    }
    spec.dims(dataset.n_features()).validate()?;
    let folds = loocv_splits(dataset)?;
    for f in &folds {
        if f.train.samples.iter().any(|s| s.subject_id == f.subject) {
            return Err(Error::Integrity(format!("subject {} leaked into its own training split", f.subject)));
        }
        if f.train.is_empty() || f.test.is_empty() {
            return Err(Error::data(format!("fold {} has an empty split", f.subject)));
        }
    }
    let grid: Vec<(usize, usize)> = (0..topk.repeats)
        .flat_map(|r| (0..folds.len()).map(move |fi| (r, fi)))
        .collect();
    let run = |&(r, fi): &(usize, usize)| run_job(fi, &folds[fi], r, methods, topk, train_cfg, spec);
    let outputs: Vec<JobOutput> = if jobs <= 1 {
        grid.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
        pool.install(|| grid.par_iter().map(run).collect())
    };

    let mut report = EvalReport {
        metadata: ReportMetadata {
            seed: topk.seed,
            config_hash: hash_json(&HashedConfig {
                methods,
                topk,
                train: train_cfg,
                model: spec,
            })?,
            dataset_fingerprint: dataset.fingerprint(),
            n_samples: dataset.len(),
            n_features: dataset.n_features(),
            subjects: folds.iter().map(|f| f.subject.clone()).collect(),
            methods: labels,
            k_percents: topk.k_percents.clone(),
            repeats: topk.repeats,
            failed_cells: 0,
        },
        cells: Vec::new(),
        folds: Vec::new(),
        rankings: Vec::new(),
        summary: Vec::new(),
        fold_summary: Vec::new(),
        comparisons: Vec::new(),
        bench: Vec::new(),
    };
    for out in outputs {
        report.folds.push(out.record);
        report.cells.extend(out.cells);
        report.rankings.extend(out.rankings);
    }
    report.refresh();
    Ok(report)
}

/// One method's slice of the evaluation grid.
pub fn fidelity_eval(
    method: &AttributionConfig,
    dataset: &SequenceDataset,
    topk: &TopKConfig,
    train_cfg: &TrainConfig,
    spec: &ModelSpec,
    jobs: usize,
) -> Result<EvalReport> {
    evaluate_methods(dataset, std::slice::from_ref(method), topk, train_cfg, spec, jobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(0, &[0]), derive_seed(0, &[1]));
        assert_ne!(derive_seed(0, &[0, 1]), derive_seed(0, &[1, 0]));
        assert_eq!(derive_seed(5, &[2, 3]), derive_seed(5, &[2, 3]));
    }
}
