//! Evaluation report: the MAE grid, summaries and serialized forms.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attribution::family;
use crate::bench::BenchResult;
use crate::error::{Error, Result};
use crate::stats::PairedComparison;

/// One `(method, k, fold, repeat)` test MAE, or the reason it is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: String,
    pub k: u32,
    pub fold: String,
    pub repeat: usize,
    pub mae: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Cell {
    pub fn failed(&self) -> bool {
        self.mae.is_none()
    }
}

/// Per fold and repeat: split fingerprints and the all-feature reference MAE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: String,
    pub repeat: usize,
    pub train_fingerprint: String,
    pub test_fingerprint: String,
    /// Fingerprint of the data the attributions were computed on.
    pub attribution_fingerprint: String,
    pub full_mae: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRecord {
    pub method: String,
    pub fold: String,
    pub repeat: usize,
    pub ranking: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub k: u32,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    /// Sample standard deviation over folds and repeats.
    pub std: Option<f64>,
    pub n: usize,
    pub failed: usize,
}

/// Mean over repeats of one method's MAE on one held-out subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub method: String,
    pub k: u32,
    pub fold: String,
    pub mean_mae: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub config_hash: String,
    pub dataset_fingerprint: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub subjects: Vec<String>,
    pub methods: Vec<String>,
    pub k_percents: Vec<u32>,
    pub repeats: usize,
    pub failed_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metadata: ReportMetadata,
    pub cells: Vec<Cell>,
    pub folds: Vec<FoldRecord>,
    pub rankings: Vec<RankingRecord>,
    pub summary: Vec<SummaryRow>,
    pub fold_summary: Vec<FoldSummary>,
    #[serde(default)]
    pub comparisons: Vec<PairedComparison>,
    /// Timings vary run to run, so they are left out of the canonical form.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bench: Vec<BenchResult>,
}

fn stats_of(values: &[f64]) -> (Option<f64>, Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let std = if m > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(median), Some(std))
}

impl EvalReport {
    /// Recomputes summaries and the failure count from the cells.
    pub fn refresh(&mut self) {
        let mut by_mk: BTreeMap<(usize, u32), (Vec<f64>, usize)> = BTreeMap::new();
        let mut by_fold: BTreeMap<(usize, u32, String), Vec<f64>> = BTreeMap::new();
        let order: BTreeMap<&str, usize> = self
            .metadata
            .methods
            .iter()
            .enumerate()
            .map(|(i, m)| (m.as_str(), i))
            .collect();
        for c in &self.cells {
            let mi = order.get(c.method.as_str()).copied().unwrap_or(usize::MAX);
            let e = by_mk.entry((mi, c.k)).or_default();
            let f = by_fold.entry((mi, c.k, c.fold.clone())).or_default();
            match c.mae {
                Some(v) => {
                    e.0.push(v);
                    f.push(v);
                }
                None => e.1 += 1,
            }
        }
        let name = |mi: usize| self.metadata.methods.get(mi).cloned().unwrap_or_default();
        self.summary = by_mk
            .iter()
            .map(|(&(mi, k), (vals, failed))| {
                let (mean, median, std) = stats_of(vals);
                SummaryRow {
                    method: name(mi),
                    k,
                    mean,
                    median,
                    std,
                    n: vals.len(),
                    failed: *failed,
                }
            })
            .collect();
        self.fold_summary = by_fold
            .iter()
            .map(|((mi, k, fold), vals)| FoldSummary {
                method: name(*mi),
                k: *k,
                fold: fold.clone(),
                mean_mae: stats_of(vals).0,
                n: vals.len(),
            })
            .collect();
        self.metadata.failed_cells = self.cells.iter().filter(|c| c.failed()).count()
            + self.folds.iter().filter(|f| f.full_mae.is_none()).count();
    }

    pub fn summary_row(&self, method: &str, k: u32) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.method == method && r.k == k)
    }

    /// Per-fold mean MAE at `k`, keyed by subject.
    pub fn fold_means(&self, method: &str, k: u32) -> BTreeMap<String, Option<f64>> {
        self.fold_summary
            .iter()
            .filter(|r| r.method == method && r.k == k)
            .map(|r| (r.fold.clone(), r.mean_mae))
            .collect()
    }

    /// Mean of the all-feature reference MAE over folds and repeats.
    pub fn full_feature_mae(&self) -> Option<f64> {
        let vals: Vec<f64> = self.folds.iter().filter_map(|f| f.full_mae).collect();
        stats_of(&vals).0
    }

    /// Canonical JSON: deterministic given the inputs, no timings.
    pub fn canonical_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.bench.clear();
        Ok(serde_json::to_string_pretty(&copy)? + "\n")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Flat `method,k,fold,repeat,mae` rows; failed cells have an empty MAE.
    pub fn grid_csv(&self) -> String {
        let mut out = String::from("method,k,fold,repeat,mae\n");
        for c in &self.cells {
            let mae = c.mae.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{},{}\n", c.method, c.k, c.fold, c.repeat, mae));
        }
        out
    }

    /// Per-fold means, one row per `(method, k, fold)`.
    pub fn fold_csv(&self) -> String {
        let mut out = String::from("method,k,fold,mean_mae,n\n");
        for r in &self.fold_summary {
            let mae = r.mean_mae.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{},{}\n", r.method, r.k, r.fold, mae, r.n));
        }
        out
    }

    /// Method / variant rows with one mean-MAE column per k.
    pub fn summary_markdown(&self) -> String {
        let ks = &self.metadata.k_percents;
        let mut out = String::from("| Method | Variant |");
        for k in ks {
            out.push_str(&format!(" {k}% MAE |"));
        }
        out.push_str("\n|---|---|");
        out.push_str(&"---:|".repeat(ks.len()));
        out.push('\n');
        let mut methods = self.metadata.methods.clone();
        methods.sort_by(|a, b| (family(a), a).cmp(&(family(b), b)));
        let mut prev: Option<String> = None;
        for m in &methods {
            let fam = family(m).to_string();
            let variant = m[fam.len()..].trim_start_matches('-');
            let shown = if prev.as_deref() == Some(fam.as_str()) { String::new() } else { fam.clone() };
            prev = Some(fam);
            out.push_str(&format!("| {shown} | {} |", if variant.is_empty() { "-" } else { variant }));
            for &k in ks {
                match self.summary_row(m, k).and_then(|r| r.mean) {
                    Some(v) => out.push_str(&format!(" {v:.4} |")),
                    None => out.push_str(" failed |"),
                }
            }
            out.push('\n');
        }
        if let Some(full) = self.full_feature_mae() {
            out.push_str(&format!("\nAll-feature reference MAE: {full:.4}\n"));
        }
        if self.metadata.failed_cells > 0 {
            out.push_str(&format!("\nFailed cells: {}\n", self.metadata.failed_cells));
        }
        out
    }
}

/// SHA-256 hex of a serializable value's JSON form.
pub fn hash_json<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Merges evaluation slices that share data, splits and seeds.
///
/// Slices must agree on the dataset fingerprint, seed, k grid, repeats and
/// fold records, and may not both fill the same cell.
pub fn assemble_report(
    slices: Vec<EvalReport>,
    bench: Vec<BenchResult>,
    comparisons: Vec<PairedComparison>,
) -> Result<EvalReport> {
    let mut iter = slices.into_iter();
    let mut merged = iter.next().ok_or_else(|| Error::data("no report slices to assemble"))?;
    let mut hashes = vec![merged.metadata.config_hash.clone()];
    let mut keys: BTreeSet<(String, u32, String, usize)> = merged
        .cells
        .iter()
        .map(|c| (c.method.clone(), c.k, c.fold.clone(), c.repeat))
        .collect();
    for slice in iter {
        let (a, b) = (&merged.metadata, &slice.metadata);
        if a.dataset_fingerprint != b.dataset_fingerprint {
            return Err(Error::Integrity(format!(
                "dataset fingerprint mismatch: {} vs {}",
                a.dataset_fingerprint, b.dataset_fingerprint
            )));
        }
        if a.seed != b.seed || a.k_percents != b.k_percents || a.repeats != b.repeats || merged.folds != slice.folds {
            return Err(Error::Integrity("slices disagree on seed, k grid, repeats or splits".into()));
        }
        for c in &slice.cells {
            if !keys.insert((c.method.clone(), c.k, c.fold.clone(), c.repeat)) {
                return Err(Error::Integrity(format!(
                    "cell ({}, k={}, {}, repeat {}) present in more than one slice",
                    c.method, c.k, c.fold, c.repeat
                )));
            }
        }
        hashes.push(slice.metadata.config_hash.clone());
        for m in &slice.metadata.methods {
            if !merged.metadata.methods.contains(m) {
                merged.metadata.methods.push(m.clone());
            }
        }
        merged.cells.extend(slice.cells);
        merged.rankings.extend(slice.rankings);
    }
    if hashes.len() > 1 {
        merged.metadata.config_hash = hash_json(&hashes)?;
    }
    merged.bench.extend(bench);
    merged.comparisons.extend(comparisons);
    merged.refresh();
    Ok(merged)
}
