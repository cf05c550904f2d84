//! Perturbation baselines: feature ablation and whole-sequence shuffling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attribution::scores::{feature_stream, FeatureScores};
use crate::data::SequenceDataset;
use crate::error::{Error, Result};
use crate::nn::{predict_mae, Regressor};
use crate::tensor::Matrix;

fn check_dims<M: Regressor + ?Sized>(model: &M, data: &SequenceDataset) -> Result<()> {
    if model.input_dim() != data.n_features() {
        return Err(Error::config(format!(
            "model expects {} features, dataset has {}",
            model.input_dim(),
            data.n_features()
        )));
    }
    if data.is_empty() {
        return Err(Error::data("perturbation importance needs a non-empty dataset"));
    }
    Ok(())
}

fn replace_column(dst: &mut Matrix, col: usize, src: impl Fn(usize) -> f64) {
    for t in 0..dst.rows() {
        dst.set(t, col, src(t));
    }
}

/// MAE increase when feature `f` is zeroed at every timestep of every
/// sample. Zero is the per-subject mean after normalization.
pub fn ablation_importance<M: Regressor + ?Sized>(model: &M, data: &SequenceDataset) -> Result<FeatureScores> {
    check_dims(model, data)?;
    let base = predict_mae(model, data)?;
    let mut scores = Vec::with_capacity(data.n_features());
    for f in 0..data.n_features() {
        let mut total = 0.0;
        for s in &data.samples {
            let mut x = s.x.clone();
            replace_column(&mut x, f, |_| 0.0);
            total += (model.predict(&x)? - s.y).abs();
        }
        scores.push(total / data.len() as f64 - base);
    }
    Ok(FeatureScores::from_scores("ablation", data.feature_names.clone(), scores))
}

/// MAE when sample `i` takes feature `f`'s sequence from sample `perm[i]`.
pub(crate) fn permuted_mae<M: Regressor + ?Sized>(
    model: &M,
    data: &SequenceDataset,
    f: usize,
    perm: &[usize],
) -> Result<f64> {
    let mut total = 0.0;
    for (s, &j) in data.samples.iter().zip(perm) {
        let donor = &data.samples[j].x;
        let mut x = s.x.clone();
        replace_column(&mut x, f, |t| donor.get(t, f));
        total += (model.predict(&x)? - s.y).abs();
    }
    Ok(total / data.len() as f64)
}

/// Mean MAE increase over `repeats` seeded permutations of each feature's
/// whole-sequence slices across samples. `sigma` holds the sample standard
/// deviation of the per-repeat increases.
pub fn shuffle_importance<M: Regressor + ?Sized>(
    model: &M,
    data: &SequenceDataset,
    repeats: usize,
    seed: u64,
) -> Result<FeatureScores> {
    check_dims(model, data)?;
    if repeats == 0 {
        return Err(Error::config("shuffle repeats must be >= 1"));
    }
    if data.len() < 2 {
        return Err(Error::data("shuffle importance needs at least 2 samples"));
    }
    let base = predict_mae(model, data)?;
    let f_count = data.n_features();
    let mut mu = Vec::with_capacity(f_count);
    let mut sigma = Vec::with_capacity(f_count);
    for f in 0..f_count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(feature_stream(&data.feature_names[f]));
        let mut deltas = Vec::with_capacity(repeats);
        let mut perm: Vec<usize> = (0..data.len()).collect();
        for _ in 0..repeats {
            perm.iter_mut().enumerate().for_each(|(i, p)| *p = i);
            perm.shuffle(&mut rng);
            deltas.push(permuted_mae(model, data, f, &perm)? - base);
        }
        let mean = deltas.iter().sum::<f64>() / repeats as f64;
        let sd = if repeats > 1 {
            (deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (repeats - 1) as f64).sqrt()
        } else {
            0.0
        };
        mu.push(mean);
        sigma.push(sd);
    }
    Ok(FeatureScores::new("shuffle", data.feature_names.clone(), mu.clone(), mu, sigma, 0.0))
}
