//! Wilcoxon signed-rank test on paired samples.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Smallest number of non-zero differences the test accepts.
pub const MIN_EFFECTIVE: usize = 5;
/// Largest `n_effective` handled by the exact null distribution.
pub const EXACT_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedRankTest {
    /// `min(W⁺, W⁻)`.
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub method: PMethod,
}

/// Midranks (1-based) of `values`, ties sharing the average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Exact two-sided p-value `min(1, 2·P(T⁺ ≤ w))` under the sign-flip null
/// distribution of the given (possibly tied) ranks. Works for any `n`; cost is
/// `O(n · Σrank)`.
pub fn exact_p_value(ranks: &[f64], w: f64) -> f64 {
    // Midranks are multiples of 1/2, so doubled ranks are integers.
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0.0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let limit = (2.0 * w).round() as usize;
    let below: f64 = counts[..=limit.min(total)].iter().sum();
    let p = 2.0 * below / 2f64.powi(ranks.len() as i32);
    p.min(1.0)
}

/// Normal approximation with tie and continuity corrections.
pub fn normal_p_value(ranks: &[f64], w: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    (2.0 * normal.cdf(-z)).min(1.0)
}

/// Signed-rank statistics of the differences without the minimum-size rule.
pub fn signed_rank(differences: &[f64]) -> Result<SignedRankTest> {
    if differences.iter().any(|d| !d.is_finite()) {
        return Err(Error::data("differences must be finite"));
    }
    let nonzero: Vec<f64> = differences.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::Degenerate);
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w_minus: f64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum();
    let w = w_plus.min(w_minus);
    let n = nonzero.len();
    let (p_value, method) = if n <= EXACT_MAX {
        (exact_p_value(&ranks, w), PMethod::Exact)
    } else {
        (normal_p_value(&ranks, w), PMethod::Normal)
    };
    Ok(SignedRankTest {
        w,
        w_plus,
        w_minus,
        p_value,
        n_effective: n,
        method,
    })
}

/// Two-sided Wilcoxon signed-rank test of `x − y`. Zero differences are
/// dropped; at least [`MIN_EFFECTIVE`] must remain.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<SignedRankTest> {
    if x.len() != y.len() {
        return Err(Error::data(format!("paired samples differ in length: {} vs {}", x.len(), y.len())));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = d.iter().filter(|v| **v != 0.0).count();
    if n == 0 && !d.is_empty() {
        return Err(Error::Degenerate);
    }
    if n < MIN_EFFECTIVE {
        return Err(Error::TooFewSamples { n, min: MIN_EFFECTIVE });
    }
    signed_rank(&d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_positive_five() {
        let t = signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(t.w, 0.0);
        assert_eq!(t.p_value, 0.0625);
        assert_eq!(t.method, PMethod::Exact);
    }

    #[test]
    fn symmetric_ties() {
        let t = signed_rank(&[1.0, -1.0, 2.0, -2.0]).unwrap();
        assert_eq!(midranks(&[1.0, 1.0, 2.0, 2.0]), vec![1.5, 1.5, 3.5, 3.5]);
        assert_eq!((t.w_plus, t.w_minus), (5.0, 5.0));
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn swap_is_symmetric() {
        let x = [1.0, 4.0, 2.5, 7.0, 3.0, 9.0];
        let y = [2.0, 1.0, 2.0, 3.0, 5.0, 1.5];
        let a = wilcoxon_signed_rank(&x, &y).unwrap();
        let b = wilcoxon_signed_rank(&y, &x).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn refusals() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(wilcoxon_signed_rank(&x, &x), Err(Error::Degenerate)));
        let mut y = x;
        y[2] = 0.0;
        assert!(matches!(
            wilcoxon_signed_rank(&x, &y),
            Err(Error::TooFewSamples { n: 1, min: 5 })
        ));
        assert!(wilcoxon_signed_rank(&x, &x[..5]).is_err());
    }

    #[test]
    fn normal_path_for_large_n() {
        let d: Vec<f64> = (1..=25).map(|i| i as f64).collect();
        let t = signed_rank(&d).unwrap();
        assert_eq!(t.method, PMethod::Normal);
        assert!(t.p_value > 0.0 && t.p_value < 1e-4);
    }
}
