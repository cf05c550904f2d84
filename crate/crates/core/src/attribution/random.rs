//! Null-control ranking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attribution::scores::{feature_stream, FeatureScores};
use crate::error::{Error, Result};

/// Seeded uniform scores in `[0, 1)`, one independent stream per feature name.
pub fn random_scores(feature_names: Vec<String>, seed: u64) -> Result<FeatureScores> {
    if feature_names.is_empty() {
        return Err(Error::config("random scores need at least one feature"));
    }
    let scores = feature_names
        .iter()
        .map(|name| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(feature_stream(name));
            rng.random::<f64>()
        })
        .collect();
    Ok(FeatureScores::from_scores("random", feature_names, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn names(f: usize) -> Vec<String> {
        (0..f).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn seeded() {
        let a = random_scores(names(6), 9).unwrap();
        let b = random_scores(names(6), 9).unwrap();
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.ranking, b.ranking);
        assert_ne!(a.scores, random_scores(names(6), 10).unwrap().scores);
    }

    #[test]
    fn single_feature() {
        assert_eq!(random_scores(names(1), 0).unwrap().ranking, vec![0]);
        assert!(random_scores(vec![], 0).is_err());
    }

    #[test]
    fn rankings_uniform_over_permutations() {
        // 24 permutations of 4 features; 1000 seeds; Pearson chi-square, 23 dof.
        let mut counts = std::collections::HashMap::new();
        for seed in 0..1000u64 {
            *counts.entry(random_scores(names(4), seed).unwrap().ranking).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = 1000.0 / 24.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new(23.0).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi2 {chi2}, p {p}");
    }
}
