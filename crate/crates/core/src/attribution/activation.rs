//! Activation capture at the three tap points and projection of hidden
//! activations back onto input features.
//!
//! A hidden unit's absolute activation is spread over the input features in
//! proportion to its absolute input-weight mass, summed over the four gates:
//!
//! ```text
//! ω[h, f] = Σ_g |W_ih[g·H + h, f]| / Σ_f' Σ_g |W_ih[g·H + h, f']|
//! ã[t, f] = Σ_h |h_t[h]| · ω[h, f]
//! ```
//!
//! Rows of `ω` sum to one, so the projection conserves `Σ_h |h_t[h]|`. The
//! penultimate layer is first routed onto hidden units through the row
//! normalized `|W_pen|`, then through `ω`.

use serde::{Deserialize, Serialize};

use crate::data::SequenceDataset;
use crate::error::{Error, Result};
use crate::nn::LstmRegressor;
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tap {
    Input,
    Lstm,
    Penultimate,
}

impl Tap {
    pub const ALL: [Tap; 3] = [Tap::Input, Tap::Lstm, Tap::Penultimate];

    pub fn name(self) -> &'static str {
        match self {
            Tap::Input => "input",
            Tap::Lstm => "lstm",
            Tap::Penultimate => "penultimate",
        }
    }
}

/// Activations of one sample at one tap: `T × F` (input), `T × H` (lstm) or
/// `1 × P` (penultimate).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    pub tap: Tap,
    pub sample_index: usize,
    pub values: Matrix,
}

pub fn capture_one(model: &LstmRegressor, x: &Matrix, tap: Tap, sample_index: usize) -> Result<ActivationTrace> {
    model.check_input(x)?;
    let values = match tap {
        Tap::Input => x.clone(),
        Tap::Lstm => model.forward(x)?.hidden,
        Tap::Penultimate => {
            let pen = model.forward(x)?.penult;
            Matrix::from_vec(1, pen.len(), pen)
        }
    };
    if !values.is_finite() {
        return Err(Error::Numeric {
            tensor: format!("{}_activations", tap.name()),
        });
    }
    Ok(ActivationTrace {
        tap,
        sample_index,
        values,
    })
}

pub fn capture_activations(model: &LstmRegressor, dataset: &SequenceDataset, tap: Tap) -> Result<Vec<ActivationTrace>> {
    if model.dims.input != dataset.n_features() {
        return Err(Error::config(format!(
            "model expects {} features, dataset has {}",
            model.dims.input,
            dataset.n_features()
        )));
    }
    dataset
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| capture_one(model, &s.x, tap, i))
        .collect()
}

/// Connection-mass projections derived from a model's weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    /// `H × F`, rows sum to one.
    pub omega: Matrix,
    /// `P × H`, rows sum to one.
    pub omega_pen: Matrix,
    /// Hidden units with all-zero input weights (given uniform rows).
    pub uniform_hidden: Vec<usize>,
    /// Penultimate units with all-zero weights.
    pub uniform_penult: Vec<usize>,
    n_features: usize,
}

fn normalize_rows(m: &mut Matrix) -> Vec<usize> {
    let cols = m.cols();
    let mut flagged = Vec::new();
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let mass: f64 = row.iter().sum();
        if mass > 0.0 {
            row.iter_mut().for_each(|v| *v /= mass);
        } else {
            row.iter_mut().for_each(|v| *v = 1.0 / cols as f64);
            flagged.push(r);
        }
    }
    flagged
}

impl FeatureMap {
    pub fn new(model: &LstmRegressor) -> Self {
        let h = model.dims.hidden;
        let f = model.dims.input;
        let mut omega = Matrix::zeros(h, f);
        for gate in 0..4 {
            for u in 0..h {
                let src = model.w_ih.row(gate * h + u);
                for (dst, w) in omega.row_mut(u).iter_mut().zip(src) {
                    *dst += w.abs();
                }
            }
        }
        let uniform_hidden = normalize_rows(&mut omega);
        if !uniform_hidden.is_empty() {
            log::warn!("{} hidden unit(s) have no input weight mass; using uniform mapping", uniform_hidden.len());
        }
        let mut omega_pen = model.w_pen.map(f64::abs);
        let uniform_penult = normalize_rows(&mut omega_pen);
        Self {
            omega,
            omega_pen,
            uniform_hidden,
            uniform_penult,
            n_features: f,
        }
    }

    /// Projects a trace into feature space (`T × F`, or `1 × F` for the
    /// penultimate tap). The input tap maps to `|x|`.
    pub fn map(&self, trace: &ActivationTrace) -> Result<Matrix> {
        let f = self.n_features;
        match trace.tap {
            Tap::Input => {
                if trace.values.cols() != f {
                    return Err(Error::config("input trace width does not match the model"));
                }
                Ok(trace.values.map(f64::abs))
            }
            Tap::Lstm => {
                if trace.values.cols() != self.omega.rows() {
                    return Err(Error::config("lstm trace width does not match the hidden size"));
                }
                let mut out = Matrix::zeros(trace.values.rows(), f);
                let mut mag = vec![0.0; self.omega.rows()];
                for t in 0..trace.values.rows() {
                    for (m, v) in mag.iter_mut().zip(trace.values.row(t)) {
                        *m = v.abs();
                    }
                    self.omega.gemv_t_acc(&mag, out.row_mut(t));
                }
                Ok(out)
            }
            Tap::Penultimate => {
                if trace.values.cols() != self.omega_pen.rows() {
                    return Err(Error::config("penultimate trace width does not match the model"));
                }
                let mag: Vec<f64> = trace.values.row(0).iter().map(|v| v.abs()).collect();
                let mut per_hidden = vec![0.0; self.omega_pen.cols()];
                self.omega_pen.gemv_t_acc(&mag, &mut per_hidden);
                let mut out = Matrix::zeros(1, f);
                self.omega.gemv_t_acc(&per_hidden, out.row_mut(0));
                Ok(out)
            }
        }
    }
}

/// One-shot projection; builds the [`FeatureMap`] from `model` each call.
pub fn map_to_features(trace: &ActivationTrace, model: &LstmRegressor) -> Result<Matrix> {
    FeatureMap::new(model).map(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ModelDims;

    #[test]
    fn input_tap_maps_to_absolute_value() {
        let model = LstmRegressor::zeros(ModelDims::new(2, 1, 1));
        let trace = capture_one(&model, &Matrix::from_rows(&[vec![-2.0, 3.0]]), Tap::Input, 0).unwrap();
        assert_eq!(trace.values.as_slice(), &[-2.0, 3.0]);
        assert_eq!(map_to_features(&trace, &model).unwrap().as_slice(), &[2.0, 3.0]);
    }

    #[test]
    fn single_unit_mass_split() {
        let mut model = LstmRegressor::zeros(ModelDims::new(2, 1, 1));
        // Gate masses: f1 = 1 + 0.5 + 1 + 0.5 = 3, f2 = 0.25 × 4 = 1.
        for (g, w1) in [1.0, -0.5, 1.0, 0.5].into_iter().enumerate() {
            model.w_ih.set(g, 0, w1);
            model.w_ih.set(g, 1, if g % 2 == 0 { 0.25 } else { -0.25 });
        }
        let map = FeatureMap::new(&model);
        assert_eq!(map.omega.row(0), &[0.75, 0.25]);
        let trace = ActivationTrace {
            tap: Tap::Lstm,
            sample_index: 0,
            values: Matrix::from_rows(&[vec![0.8]]),
        };
        let mapped = map.map(&trace).unwrap();
        assert!((mapped.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((mapped.get(0, 1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_unit_gets_uniform_row() {
        let model = LstmRegressor::zeros(ModelDims::new(4, 2, 1));
        let map = FeatureMap::new(&model);
        assert_eq!(map.uniform_hidden, vec![0, 1]);
        assert_eq!(map.omega.row(1), &[0.25; 4]);
    }

    #[test]
    fn mass_is_conserved_for_lstm_and_penultimate() {
        let model = LstmRegressor::init(ModelDims::new(5, 7, 3), 2).unwrap();
        let map = FeatureMap::new(&model);
        let x = Matrix::from_vec(4, 5, (0..20).map(|i| ((i * 37) % 11) as f64 / 5.0 - 1.0).collect());
        let lstm = capture_one(&model, &x, Tap::Lstm, 0).unwrap();
        let mapped = map.map(&lstm).unwrap();
        for t in 0..4 {
            let want: f64 = lstm.values.row(t).iter().map(|v| v.abs()).sum();
            let got: f64 = mapped.row(t).iter().sum();
            assert!((want - got).abs() < 1e-9);
        }
        let pen = capture_one(&model, &x, Tap::Penultimate, 0).unwrap();
        let mapped = map.map(&pen).unwrap();
        assert_eq!(mapped.shape(), (1, 5));
        let want: f64 = pen.values.row(0).iter().map(|v| v.abs()).sum();
        assert!((want - mapped.row(0).iter().sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_a_config_error() {
        let model = LstmRegressor::zeros(ModelDims::new(3, 2, 1));
        let x = Matrix::zeros(2, 4);
        assert!(matches!(capture_one(&model, &x, Tap::Lstm, 0), Err(Error::Config(_))));
    }
}
