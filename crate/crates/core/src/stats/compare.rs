//! Paired comparisons of methods across folds of an evaluation report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::attribution::family;
use crate::error::{Error, Result};
use crate::evaluation::EvalReport;
use crate::stats::effect::{cohens_d_paired, EffectSize};
use crate::stats::wilcoxon::{wilcoxon_signed_rank, SignedRankTest};

/// `x` holds the reference method's per-fold MAE, `y` the other method's.
/// Negative `d` means the reference has lower error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub method_a: String,
    pub method_b: String,
    pub k: u32,
    pub folds: Vec<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub test: Option<SignedRankTest>,
    /// Why the test was not computed, when it was not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_error: Option<String>,
    pub effect_d: Option<EffectSize>,
}

impl PairedComparison {
    pub fn p_value(&self) -> Option<f64> {
        self.test.as_ref().map(|t| t.p_value)
    }

    pub fn n_effective(&self) -> Option<usize> {
        self.test.as_ref().map(|t| t.n_effective)
    }
}

/// Per-fold MAE (mean over repeats) aligned by subject. Every fold of the
/// report must have at least one successful cell.
pub fn fold_vector(report: &EvalReport, method: &str, k: u32) -> Result<BTreeMap<String, f64>> {
    if !report.metadata.methods.iter().any(|m| m == method) {
        return Err(Error::data(format!("method {method:?} not in report")));
    }
    if !report.metadata.k_percents.contains(&k) {
        return Err(Error::data(format!("k={k} not in report")));
    }
    let means = report.fold_means(method, k);
    let mut out = BTreeMap::new();
    for subject in &report.metadata.subjects {
        match means.get(subject).copied().flatten() {
            Some(v) => {
                out.insert(subject.clone(), v);
            }
            None => {
                return Err(Error::Integrity(format!(
                    "method {method:?} has no successful cell for fold {subject} at k={k}"
                )))
            }
        }
    }
    Ok(out)
}

fn paired(report: &EvalReport, a: &str, b: &str, k: u32) -> Result<(Vec<String>, Vec<f64>, Vec<f64>)> {
    let va = fold_vector(report, a, k)?;
    let vb = fold_vector(report, b, k)?;
    let folds: Vec<String> = va.keys().cloned().collect();
    let x = folds.iter().map(|f| va[f]).collect();
    let y = folds.iter().map(|f| vb[f]).collect();
    Ok((folds, x, y))
}

/// Strict comparison: test errors (degenerate or too few pairs) propagate.
pub fn compare_pair(report: &EvalReport, a: &str, b: &str, k: u32) -> Result<PairedComparison> {
    let (folds, x, y) = paired(report, a, b, k)?;
    let test = wilcoxon_signed_rank(&x, &y)?;
    let d = cohens_d_paired(&x, &y)?;
    Ok(PairedComparison {
        method_a: a.into(),
        method_b: b.into(),
        k,
        folds,
        x,
        y,
        test: Some(test),
        test_error: None,
        effect_d: Some(d),
    })
}

/// Best variant of each other method family (lowest mean MAE at `k`) against
/// `reference`. Rows whose test cannot be computed carry the reason instead.
pub fn compare_all(report: &EvalReport, reference: &str, k: u32) -> Result<Vec<PairedComparison>> {
    fold_vector(report, reference, k)?;
    let ref_family = family(reference);
    let mut best: BTreeMap<&str, (&str, f64)> = BTreeMap::new();
    for m in &report.metadata.methods {
        let fam = family(m);
        if fam == ref_family {
            continue;
        }
        let Some(mean) = report.summary_row(m, k).and_then(|r| r.mean) else {
            continue;
        };
        match best.get(fam) {
            Some(&(_, v)) if v <= mean => {}
            _ => {
                best.insert(fam, (m.as_str(), mean));
            }
        }
    }
    let mut out = Vec::new();
    for (_, (method, _)) in best {
        let (folds, x, y) = paired(report, reference, method, k)?;
        let (test, test_error) = match wilcoxon_signed_rank(&x, &y) {
            Ok(t) => (Some(t), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let effect_d = cohens_d_paired(&x, &y).ok();
        out.push(PairedComparison {
            method_a: reference.into(),
            method_b: method.into(),
            k,
            folds,
            x,
            y,
            test,
            test_error,
            effect_d,
        });
    }
    Ok(out)
}

pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "p<0.001".into()
    } else {
        format!("p={p:.4}")
    }
}

fn format_cell(c: &PairedComparison) -> String {
    let d = c.effect_d.map(|d| d.to_string()).unwrap_or_else(|| "—".into());
    match (&c.test, &c.test_error) {
        (Some(t), _) => format!("{}, d={d}", format_p(t.p_value)),
        (None, Some(e)) => format!("n/a ({e}), d={d}"),
        (None, None) => format!("n/a, d={d}"),
    }
}

fn ordered_methods(comparisons: &[PairedComparison]) -> (Vec<String>, Vec<u32>) {
    let mut methods: Vec<String> = Vec::new();
    let mut ks: Vec<u32> = Vec::new();
    for c in comparisons {
        if !methods.contains(&c.method_b) {
            methods.push(c.method_b.clone());
        }
        if !ks.contains(&c.k) {
            ks.push(c.k);
        }
    }
    methods.sort();
    ks.sort_unstable();
    (methods, ks)
}

/// Methods as rows, top-k levels as columns, `p=…, d=…` cells.
pub fn comparison_markdown(comparisons: &[PairedComparison]) -> String {
    let (methods, ks) = ordered_methods(comparisons);
    let mut out = String::from("| Method |");
    for k in &ks {
        out.push_str(&format!(" Top-{k}% |"));
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(ks.len()));
    out.push('\n');
    for m in &methods {
        out.push_str(&format!("| {m} |"));
        for k in &ks {
            let cell = comparisons
                .iter()
                .find(|c| &c.method_b == m && c.k == *k)
                .map(format_cell)
                .unwrap_or_else(|| "—".into());
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
    if let Some(first) = comparisons.first() {
        out.push_str(&format!("\nReference: {}. Cells marked \"—\" have undefined effect sizes (zero variance).\n", first.method_a));
    }
    out
}

pub fn comparison_csv(comparisons: &[PairedComparison]) -> String {
    let mut out = String::from("reference,method,k,n_effective,w,p_value,cohens_d,note\n");
    for c in comparisons {
        let (n, w, p) = match &c.test {
            Some(t) => (t.n_effective.to_string(), t.w.to_string(), t.p_value.to_string()),
            None => Default::default(),
        };
        let d = match c.effect_d {
            Some(EffectSize::Defined(v)) => v.to_string(),
            _ => "—".into(),
        };
        let note = c.test_error.clone().unwrap_or_default().replace(',', ";");
        out.push_str(&format!("{},{},{},{n},{w},{p},{d},{note}\n", c.method_a, c.method_b, c.k));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_formatting() {
        assert_eq!(format_p(0.0004), "p<0.001");
        assert_eq!(format_p(0.0018), "p=0.0018");
    }
}
