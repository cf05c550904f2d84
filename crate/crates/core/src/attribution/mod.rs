//! Attribution methods behind one interface.
//!
//! Every method maps `(model, dataset, config)` to [`FeatureScores`]. Methods
//! are named by tags such as `deepactif-lstm`, `ig-mean` or `kernelshap`.

pub mod activation;
pub mod deepactif;
pub mod ig;
pub mod inv;
pub mod perturbation;
pub mod random;
pub mod scores;
pub mod shap;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use activation::{capture_activations, map_to_features, ActivationTrace, FeatureMap, Tap};
pub use deepactif::{deepactif, deepactif_tag};
pub use ig::{ig_feature_scores, integrated_gradients, BaselineKind, IgSettings};
pub use inv::{inv_aggregate, InvAccumulator, DEFAULT_EPSILON};
pub use perturbation::{ablation_importance, shuffle_importance};
pub use random::random_scores;
pub use scores::{rank_descending, FeatureScores};
pub use shap::{exact_shapley, kernel_shap, kernel_shap_scores, ShapSettings};

use crate::data::SequenceDataset;
use crate::error::{Error, Result};
use crate::nn::LstmRegressor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    DeepActif(Tap),
    Ablation,
    Shuffle,
    Ig(BaselineKind),
    KernelShap,
    Random,
    /// Scores supplied in the config; used for oracle rankings.
    Fixed,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::DeepActif(Tap::Input),
        Method::DeepActif(Tap::Lstm),
        Method::DeepActif(Tap::Penultimate),
        Method::Ablation,
        Method::Shuffle,
        Method::Ig(BaselineKind::Zero),
        Method::Ig(BaselineKind::Mean),
        Method::Ig(BaselineKind::Random),
        Method::KernelShap,
        Method::Random,
        Method::Fixed,
    ];

    pub fn tag(self) -> String {
        match self {
            Method::DeepActif(tap) => deepactif_tag(tap),
            Method::Ablation => "ablation".into(),
            Method::Shuffle => "shuffle".into(),
            Method::Ig(kind) => format!("ig-{}", kind.name()),
            Method::KernelShap => "kernelshap".into(),
            Method::Random => "random".into(),
            Method::Fixed => "fixed".into(),
        }
    }

    pub fn valid_tags() -> Vec<String> {
        Method::ALL.iter().map(|m| m.tag()).collect()
    }

    /// True for methods that never run a backward pass.
    pub fn is_forward_only(self) -> bool {
        !matches!(self, Method::Ig(_))
    }
}

/// Method family of a tag: the part before the first `-`.
pub fn family(tag: &str) -> &str {
    tag.split('-').next().unwrap_or(tag)
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::config(format!("unknown method tag {s:?}; valid tags: {}", Method::valid_tags().join(", "))))
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.tag())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_ig_steps() -> usize {
    50
}
fn default_shap_coalitions() -> usize {
    2048
}
fn default_shap_max_samples() -> usize {
    64
}
fn default_shuffle_repeats() -> usize {
    10
}
fn default_random_draws() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionConfig {
    pub method: Method,
    /// Report label; defaults to the method tag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_ig_steps")]
    pub ig_steps: usize,
    #[serde(default = "default_shap_coalitions")]
    pub shap_coalitions: usize,
    /// Samples explained by KernelSHAP, evenly spaced; 0 explains all.
    #[serde(default = "default_shap_max_samples")]
    pub shap_max_samples: usize,
    #[serde(default = "default_shuffle_repeats")]
    pub shuffle_repeats: usize,
    #[serde(default = "default_random_draws")]
    pub random_baseline_draws: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_scores: Option<Vec<f64>>,
}

impl AttributionConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            label: None,
            epsilon: DEFAULT_EPSILON,
            ig_steps: default_ig_steps(),
            shap_coalitions: default_shap_coalitions(),
            shap_max_samples: default_shap_max_samples(),
            shuffle_repeats: default_shuffle_repeats(),
            random_baseline_draws: default_random_draws(),
            seed: 0,
            fixed_scores: None,
        }
    }

    pub fn fixed(label: &str, scores: Vec<f64>) -> Self {
        Self {
            label: Some(label.to_string()),
            fixed_scores: Some(scores),
            ..Self::new(Method::Fixed)
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.method.tag())
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::config("epsilon must be finite and >= 0"));
        }
        if self.ig_steps == 0 {
            return Err(Error::config("ig_steps must be >= 1"));
        }
        if self.method == Method::KernelShap && self.shap_coalitions < 2 * n_features {
            return Err(Error::config(format!(
                "shap_coalitions must be >= 2F = {}",
                2 * n_features
            )));
        }
        if self.shuffle_repeats == 0 {
            return Err(Error::config("shuffle_repeats must be >= 1"));
        }
        if self.random_baseline_draws == 0 {
            return Err(Error::config("random_baseline_draws must be >= 1"));
        }
        match (&self.method, &self.fixed_scores) {
            (Method::Fixed, None) => Err(Error::config("method \"fixed\" needs fixed_scores")),
            (Method::Fixed, Some(s)) if s.len() != n_features => Err(Error::config(format!(
                "fixed_scores has {} entries, dataset has {n_features} features",
                s.len()
            ))),
            _ => Ok(()),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Runs the configured method. The returned scores carry the config label as
/// their method tag.
pub fn compute_scores(model: &LstmRegressor, data: &SequenceDataset, config: &AttributionConfig) -> Result<FeatureScores> {
    config.validate(data.n_features())?;
    let mut scores = match config.method {
        Method::DeepActif(tap) => deepactif(model, data, tap, config.epsilon)?,
        Method::Ablation => ablation_importance(model, data)?,
        Method::Shuffle => shuffle_importance(model, data, config.shuffle_repeats, config.seed)?,
        Method::Ig(kind) => {
            let settings = IgSettings {
                steps: config.ig_steps,
                random_draws: config.random_baseline_draws,
                seed: config.seed,
            };
            ig_feature_scores(model, data, kind, &settings)?
        }
        Method::KernelShap => {
            let settings = ShapSettings {
                n_coalitions: config.shap_coalitions,
                max_samples: config.shap_max_samples,
                seed: config.seed,
            };
            kernel_shap_scores(model, data, &settings)?
        }
        Method::Random => random_scores(data.feature_names.clone(), config.seed)?,
        Method::Fixed => {
            let s = config.fixed_scores.clone().unwrap_or_default();
            FeatureScores::from_scores("fixed", data.feature_names.clone(), s)
        }
    };
    scores.method_tag = config.label();
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(serde_json::from_str::<Method>(&json).unwrap(), m);
        }
        let err = "deeplift".parse::<Method>().unwrap_err().to_string();
        assert!(err.contains("deepactif-lstm") && err.contains("kernelshap"), "{err}");
    }

    #[test]
    fn families() {
        assert_eq!(family("deepactif-lstm"), "deepactif");
        assert_eq!(family("ig-zero"), "ig");
        assert_eq!(family("random"), "random");
    }

    #[test]
    fn config_defaults_from_json() {
        let c: AttributionConfig = serde_json::from_str(r#"{"method":"ig-mean"}"#).unwrap();
        assert_eq!(c.ig_steps, 50);
        assert_eq!(c.shap_coalitions, 2048);
        assert_eq!(c.shuffle_repeats, 10);
        assert_eq!(c.random_baseline_draws, 5);
        assert_eq!(c.epsilon, 1e-8);
        assert_eq!(c.label(), "ig-mean");
    }

    #[test]
    fn config_validation() {
        let mut c = AttributionConfig::new(Method::KernelShap);
        c.shap_coalitions = 5;
        assert!(c.validate(3).is_err());
        c.shap_coalitions = 6;
        assert!(c.validate(3).is_ok());
        let mut c = AttributionConfig::new(Method::Ig(BaselineKind::Zero));
        c.ig_steps = 0;
        assert!(c.validate(3).is_err());
        assert!(AttributionConfig::new(Method::Fixed).validate(3).is_err());
        assert!(AttributionConfig::fixed("oracle", vec![1.0, 0.0]).validate(3).is_err());
    }
}
