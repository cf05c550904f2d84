//! Paired Cohen's d.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Effect size; `Undefined` when the differences have zero variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum EffectSize {
    Defined(f64),
    Undefined,
}

impl EffectSize {
    pub fn value(self) -> Option<f64> {
        match self {
            EffectSize::Defined(d) => Some(d),
            EffectSize::Undefined => None,
        }
    }
}

impl fmt::Display for EffectSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EffectSize::Defined(d) => write!(f, "{d:.2}"),
            EffectSize::Undefined => f.write_str("—"),
        }
    }
}

/// `mean(x − y) / sd(x − y)` with the sample (n − 1) standard deviation.
pub fn cohens_d_paired(x: &[f64], y: &[f64]) -> Result<EffectSize> {
    if x.len() != y.len() {
        return Err(Error::data(format!("paired samples differ in length: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::data("Cohen's d needs at least 2 pairs"));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd == 0.0 {
        return Ok(EffectSize::Undefined);
    }
    Ok(EffectSize::Defined(mean / sd))
}
