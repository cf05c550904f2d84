use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Global per-feature importances with a deterministic ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScores {
    pub method_tag: String,
    pub feature_names: Vec<String>,
    pub scores: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub epsilon: f64,
    /// Feature indices by descending score; ties go to the lower index.
    pub ranking: Vec<usize>,
}

/// RNG stream id derived from a feature name. Seeding per name rather than per
/// column index keeps seeded methods equivariant under column permutations.
pub fn feature_stream(name: &str) -> u64 {
    let digest = Sha256::digest(name.as_bytes());
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

/// Descending by score, ascending by index on ties. NaN sorts last.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        let (sa, sb) = (scores[a], scores[b]);
        match (sa.is_nan(), sb.is_nan()) {
            (true, true) => a.cmp(&b),
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            _ => sb.partial_cmp(&sa).unwrap().then(a.cmp(&b)),
        }
    });
    idx
}

impl FeatureScores {
    pub fn new(
        method_tag: impl Into<String>,
        feature_names: Vec<String>,
        scores: Vec<f64>,
        mu: Vec<f64>,
        sigma: Vec<f64>,
        epsilon: f64,
    ) -> Self {
        let f = scores.len();
        assert_eq!(feature_names.len(), f, "feature name count");
        assert_eq!(mu.len(), f, "mu length");
        assert_eq!(sigma.len(), f, "sigma length");
        let ranking = rank_descending(&scores);
        Self {
            method_tag: method_tag.into(),
            feature_names,
            scores,
            mu,
            sigma,
            epsilon,
            ranking,
        }
    }

    /// Scores with no separate spread statistic: `mu = score`, `sigma = 0`.
    pub fn from_scores(method_tag: impl Into<String>, feature_names: Vec<String>, scores: Vec<f64>) -> Self {
        let f = scores.len();
        Self::new(method_tag, feature_names, scores.clone(), scores, vec![0.0; f], 0.0)
    }

    pub fn n_features(&self) -> usize {
        self.scores.len()
    }

    /// Feature names in rank order.
    pub fn ranked_names(&self) -> Vec<&str> {
        self.ranking.iter().map(|&i| self.feature_names[i].as_str()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ScoresDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScoresDoc = serde_json::from_str(text)?;
        let names = doc.features.iter().map(|f| f.name.clone()).collect();
        let scores = doc.features.iter().map(|f| f.score).collect();
        let mu = doc.features.iter().map(|f| f.mu).collect();
        let sigma = doc.features.iter().map(|f| f.sigma).collect();
        let out = Self::new(doc.method_tag, names, scores, mu, sigma, doc.epsilon);
        if out.ranking != doc.ranking {
            return Err(Error::Integrity("stored ranking disagrees with stored scores".into()));
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureEntry {
    name: String,
    mu: f64,
    sigma: f64,
    score: f64,
}

#[derive(Serialize, Deserialize)]
struct ScoresDoc {
    method_tag: String,
    epsilon: f64,
    features: Vec<FeatureEntry>,
    ranking: Vec<usize>,
}

impl From<&FeatureScores> for ScoresDoc {
    fn from(s: &FeatureScores) -> Self {
        Self {
            method_tag: s.method_tag.clone(),
            epsilon: s.epsilon,
            features: (0..s.n_features())
                .map(|i| FeatureEntry {
                    name: s.feature_names[i].clone(),
                    mu: s.mu[i],
                    sigma: s.sigma[i],
                    score: s.scores[i],
                })
                .collect(),
            ranking: s.ranking.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_break_by_index() {
        assert_eq!(rank_descending(&[1.0, 3.0, 1.0, 3.0]), vec![1, 3, 0, 2]);
        assert_eq!(rank_descending(&[0.0, 0.0, 0.0]), vec![0, 1, 2]);
        assert_eq!(rank_descending(&[f64::NAN, 1.0]), vec![1, 0]);
    }

    #[test]
    fn json_layout_and_round_trip() {
        let s = FeatureScores::new("m", vec!["a".into(), "b".into()], vec![0.5, 2.0], vec![1.0, 2.0], vec![2.0, 1.0], 1e-8);
        let text = s.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["method_tag"], "m");
        assert_eq!(v["ranking"], serde_json::json!([1, 0]));
        assert_eq!(v["features"][1]["name"], "b");
        assert_eq!(FeatureScores::from_json(&text).unwrap(), s);
    }

    proptest! {
        #[test]
        fn ranking_is_a_sorted_permutation(scores in proptest::collection::vec(-1e3f64..1e3, 1..30)) {
            let r = rank_descending(&scores);
            let mut seen = r.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..scores.len()).collect::<Vec<_>>());
            for w in r.windows(2) {
                prop_assert!(scores[w[0]] >= scores[w[1]]);
                if scores[w[0]] == scores[w[1]] {
                    prop_assert!(w[0] < w[1]);
                }
            }
        }
    }
}
