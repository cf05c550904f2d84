//! Activation-based attribution: capture, project, aggregate. Forward passes
//! only; memory is one sample's activations plus `O(F)` accumulators.

use crate::attribution::activation::{capture_one, FeatureMap, Tap};
use crate::attribution::inv::InvAccumulator;
use crate::attribution::scores::FeatureScores;
use crate::data::SequenceDataset;
use crate::error::{Error, Result};
use crate::nn::LstmRegressor;

pub fn deepactif_tag(tap: Tap) -> String {
    format!("deepactif-{}", tap.name())
}

pub fn deepactif(model: &LstmRegressor, dataset: &SequenceDataset, tap: Tap, epsilon: f64) -> Result<FeatureScores> {
    if dataset.is_empty() {
        return Err(Error::data("deepactif needs at least one sample"));
    }
    if model.dims.input != dataset.n_features() {
        return Err(Error::config(format!(
            "model expects {} features, dataset has {}",
            model.dims.input,
            dataset.n_features()
        )));
    }
    let map = FeatureMap::new(model);
    let mut acc = InvAccumulator::new(dataset.n_features());
    for (i, s) in dataset.samples.iter().enumerate() {
        let trace = capture_one(model, &s.x, tap, i)?;
        acc.push_matrix(&map.map(&trace)?);
    }
    acc.finish(&deepactif_tag(tap), dataset.feature_names.clone(), epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::activation::{capture_activations, map_to_features};
    use crate::attribution::inv::{inv_aggregate, DEFAULT_EPSILON};
    use crate::data::{synth_generate, SynthConfig};
    use crate::nn::{backward_invocations, ModelDims};

    fn data(seed: u64) -> SequenceDataset {
        synth_generate(&SynthConfig {
            n_subjects: 2,
            windows_per_subject: 5,
            window_len: 6,
            n_features: 4,
            relevant: vec![1],
            weights: vec![1.0],
            noise_std: 0.1,
            seed,
            ar_coefficient: 0.9,
        })
        .unwrap()
        .dataset
    }

    #[test]
    fn streaming_matches_batch_composition() {
        let ds = data(3);
        let model = LstmRegressor::init(ModelDims::new(4, 6, 3), 1).unwrap();
        for tap in Tap::ALL {
            let traces = capture_activations(&model, &ds, tap).unwrap();
            assert_eq!(traces.len(), ds.len());
            let mapped: Vec<_> = traces.iter().map(|t| map_to_features(t, &model).unwrap()).collect();
            let batch = inv_aggregate(&mapped, ds.feature_names.clone(), DEFAULT_EPSILON).unwrap();
            let streamed = deepactif(&model, &ds, tap, DEFAULT_EPSILON).unwrap();
            for (a, b) in batch.scores.iter().zip(&streamed.scores) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
            assert_eq!(batch.ranking, streamed.ranking);
        }
    }

    #[test]
    fn zero_model_lstm_tap_scores_zero_with_identity_ranking() {
        let ds = data(4);
        let model = LstmRegressor::zeros(ModelDims::new(4, 3, 2));
        for t in capture_activations(&model, &ds, Tap::Lstm).unwrap() {
            assert!(t.values.as_slice().iter().all(|&v| v == 0.0));
        }
        let s = deepactif(&model, &ds, Tap::Lstm, DEFAULT_EPSILON).unwrap();
        assert_eq!(s.scores, vec![0.0; 4]);
        assert_eq!(s.ranking, vec![0, 1, 2, 3]);
    }

    #[test]
    fn input_tap_trace_is_the_sample() {
        let ds = data(5);
        let model = LstmRegressor::zeros(ModelDims::new(4, 3, 2));
        let traces = capture_activations(&model, &ds, Tap::Input).unwrap();
        for (t, s) in traces.iter().zip(&ds.samples) {
            assert_eq!(t.values, s.x);
        }
    }

    #[test]
    fn duplicating_a_sample_leaves_scores_unchanged() {
        let ds = data(6);
        let one = ds.with_samples(vec![ds.samples[0].clone()]);
        let five = ds.with_samples(vec![ds.samples[0].clone(); 5]);
        let model = LstmRegressor::init(ModelDims::new(4, 5, 2), 8).unwrap();
        for tap in Tap::ALL {
            let a = deepactif(&model, &one, tap, DEFAULT_EPSILON).unwrap();
            let b = deepactif(&model, &five, tap, DEFAULT_EPSILON).unwrap();
            for (x, y) in a.scores.iter().zip(&b.scores) {
                assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{tap:?}: {x} vs {y}");
            }
            assert_eq!(a.ranking, b.ranking);
        }
    }

    #[test]
    fn never_runs_a_backward_pass() {
        let ds = data(7);
        let model = LstmRegressor::init(ModelDims::new(4, 5, 2), 8).unwrap();
        let before = backward_invocations();
        for tap in Tap::ALL {
            deepactif(&model, &ds, tap, DEFAULT_EPSILON).unwrap();
        }
        assert_eq!(backward_invocations(), before);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let ds = data(7);
        let model = LstmRegressor::zeros(ModelDims::new(3, 3, 2));
        assert!(deepactif(&model, &ds, Tap::Lstm, DEFAULT_EPSILON).is_err());
        assert!(deepactif(&model, &ds.with_samples(vec![]), Tap::Lstm, DEFAULT_EPSILON).is_err());
    }
}
