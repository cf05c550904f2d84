use deepactif::attribution::{
    capture_activations, compute_scores, deepactif as run_deepactif, exact_shapley, integrated_gradients, inv_aggregate,
    kernel_shap, map_to_features, AttributionConfig, Method, Tap,
};
use deepactif::data::{synth_generate, Sample, SequenceDataset, SynthConfig};
use deepactif::nn::{LstmRegressor, ModelDims};
use deepactif::tensor::Matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dataset(seed: u64, n: usize, t: usize, f: usize) -> SequenceDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|i| Sample {
            subject_id: format!("s{}", i % 2),
            x: Matrix::from_vec(t, f, (0..t * f).map(|_| rng.random_range(-2.0..2.0)).collect()),
            y: rng.random_range(-1.0..1.0),
        })
        .collect();
    SequenceDataset::new((0..f).map(|c| format!("feat{c}")).collect(), t, samples).unwrap()
}

fn permute_dataset(data: &SequenceDataset, perm: &[usize]) -> SequenceDataset {
    let samples = data
        .samples
        .iter()
        .map(|s| Sample {
            subject_id: s.subject_id.clone(),
            x: s.x.select_columns(perm),
            y: s.y,
        })
        .collect();
    let names = perm.iter().map(|&c| data.feature_names[c].clone()).collect();
    SequenceDataset::new(names, data.window_len, samples).unwrap()
}

fn permute_model(model: &LstmRegressor, perm: &[usize]) -> LstmRegressor {
    let mut out = model.clone();
    out.w_ih = model.w_ih.select_columns(perm);
    out
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn equivariance_methods() -> Vec<AttributionConfig> {
    let mut out: Vec<AttributionConfig> = Method::ALL
        .iter()
        .filter(|m| **m != Method::Fixed)
        .map(|&m| AttributionConfig {
            ig_steps: 8,
            shuffle_repeats: 3,
            random_baseline_draws: 2,
            seed: 17,
            ..AttributionConfig::new(m)
        })
        .collect();
    out.push(AttributionConfig::fixed("oracle", vec![0.5, 3.0, -1.0, 2.0]));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn permuting_features_permutes_every_method(seed in 0u64..10_000, perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
        let model = LstmRegressor::init(ModelDims::new(4, 3, 2), seed).unwrap();
        let data = random_dataset(seed + 1, 6, 4, 4);
        let p_model = permute_model(&model, &perm);
        let p_data = permute_dataset(&data, &perm);
        for cfg in equivariance_methods() {
            let base = compute_scores(&model, &data, &cfg).unwrap();
            let p_cfg = match &cfg.fixed_scores {
                Some(s) => AttributionConfig { fixed_scores: Some(perm.iter().map(|&c| s[c]).collect()), ..cfg.clone() },
                None => cfg.clone(),
            };
            let permuted = compute_scores(&p_model, &p_data, &p_cfg).unwrap();
            for (j, &c) in perm.iter().enumerate() {
                prop_assert!(
                    close(permuted.scores[j], base.scores[c], 1e-9),
                    "{}: column {} got {} expected {}", cfg.label(), j, permuted.scores[j], base.scores[c]
                );
            }
        }
    }

    #[test]
    fn inv_scores_are_scale_invariant(
        values in prop::collection::vec(0.0f64..5.0, 12..40),
        c in 0.1f64..10.0,
    ) {
        let f = 2;
        let rows = values.len() / f;
        let m = Matrix::from_vec(rows, f, values[..rows * f].to_vec());
        let names = vec!["a".to_string(), "b".to_string()];
        let exact = inv_aggregate(std::slice::from_ref(&m), names.clone(), 0.0).unwrap();
        let scaled = inv_aggregate(&[m.map(|v| v * c)], names.clone(), 0.0).unwrap();
        for k in 0..f {
            if exact.sigma[k] > 0.0 {
                prop_assert!(close(exact.scores[k], scaled.scores[k], 1e-12));
            }
        }
        let with_eps = inv_aggregate(std::slice::from_ref(&m), names.clone(), 1e-8).unwrap();
        let with_eps_scaled = inv_aggregate(&[m.map(|v| v * c)], names, 1e-8).unwrap();
        for k in 0..f {
            if with_eps.sigma[k] >= 1e-4 {
                let rel = (with_eps.scores[k] - with_eps_scaled.scores[k]).abs() / with_eps.scores[k].abs().max(1e-300);
                prop_assert!(rel < 1e-3);
            }
        }
    }

    #[test]
    fn lstm_mapping_conserves_mass(seed in 0u64..10_000) {
        let model = LstmRegressor::init(ModelDims::new(5, 7, 3), seed).unwrap();
        let data = random_dataset(seed, 3, 6, 5);
        for trace in capture_activations(&model, &data, Tap::Lstm).unwrap() {
            let mapped = map_to_features(&trace, &model).unwrap();
            for t in 0..trace.values.rows() {
                let hidden: f64 = trace.values.row(t).iter().map(|v| v.abs()).sum();
                let features: f64 = mapped.row(t).iter().sum();
                prop_assert!((hidden - features).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn ig_completeness_on_random_models() {
    for seed in 0..5 {
        let model = LstmRegressor::init(ModelDims::new(3, 6, 4), seed).unwrap();
        let data = random_dataset(seed, 4, 8, 3);
        let baseline = Matrix::zeros(8, 3);
        let f0 = model.predict(&baseline).unwrap();
        for s in &data.samples {
            let attr = integrated_gradients(&model, &s.x, &baseline, 200).unwrap();
            let total: f64 = attr.as_slice().iter().sum();
            let gap = model.predict(&s.x).unwrap() - f0;
            assert!((total - gap).abs() < 1e-3, "{total} vs {gap}");
        }
    }
}

#[test]
fn ig_of_constant_model_is_zero() {
    let mut model = LstmRegressor::init(ModelDims::new(3, 4, 2), 1).unwrap();
    model.w_out.iter_mut().for_each(|v| *v = 0.0);
    let data = random_dataset(2, 1, 5, 3);
    let attr = integrated_gradients(&model, &data.samples[0].x, &Matrix::zeros(5, 3), 10).unwrap();
    assert!(attr.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn kernel_shap_matches_exact_shapley_at_eight_features() {
    for seed in 0..3 {
        let model = LstmRegressor::init(ModelDims::new(8, 6, 4), seed).unwrap();
        let data = random_dataset(seed + 5, 2, 5, 8);
        let background = data.feature_means();
        for s in &data.samples {
            let exact = exact_shapley(&model, &s.x, &background).unwrap();
            // 254 coalitions covers every proper non-empty subset: full enumeration.
            let kernel = kernel_shap(&model, &s.x, &background, 254, seed).unwrap();
            let diff = exact.iter().zip(&kernel).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-6, "max diff {diff}");
        }
    }
}

#[test]
fn kernel_shap_efficiency_for_many_sizes() {
    use deepactif::nn::Regressor;
    for f in [1usize, 2, 5, 9, 13, 16] {
        let model = LstmRegressor::init(ModelDims::new(f, 4, 3), f as u64).unwrap();
        let data = random_dataset(f as u64, 1, 4, f);
        let x = &data.samples[0].x;
        let background = vec![0.1; f];
        let mut masked = x.clone();
        for r in 0..masked.rows() {
            masked.row_mut(r).copy_from_slice(&background);
        }
        let gap = Regressor::predict(&model, x).unwrap() - Regressor::predict(&model, &masked).unwrap();
        let phi = kernel_shap(&model, x, &background, 600.max(2 * f), 3).unwrap();
        let total: f64 = phi.iter().sum();
        assert!((total - gap).abs() <= 1e-12 * gap.abs().max(1.0), "F={f}: {total} vs {gap}");
    }
}

#[test]
fn input_tap_ranks_a_consistently_large_feature_first() {
    let out = synth_generate(&SynthConfig {
        n_subjects: 3,
        windows_per_subject: 20,
        window_len: 10,
        n_features: 6,
        relevant: vec![0],
        weights: vec![1.0],
        noise_std: 0.1,
        seed: 8,
        ar_coefficient: 0.9,
    })
    .unwrap();
    // Feature 4 gets a mean-to-spread ratio ten times that of a unit normal's |x|.
    let shifted: Vec<Sample> = out
        .dataset
        .samples
        .iter()
        .map(|s| {
            let mut x = s.x.clone();
            for t in 0..x.rows() {
                let v = x.get(t, 4);
                x.set(t, 4, 0.1 * v + 1.5);
            }
            Sample { x, ..s.clone() }
        })
        .collect();
    let data = out.dataset.with_samples(shifted);
    let model = LstmRegressor::init(ModelDims::new(6, 4, 2), 0).unwrap();
    let scores = run_deepactif(&model, &data, Tap::Input, 1e-8).unwrap();
    assert_eq!(scores.ranking[0], 4);
}
