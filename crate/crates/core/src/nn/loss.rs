use crate::error::{Error, Result};

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) {
        return Err(Error::config(format!("smooth L1 beta must be > 0, got {beta}")));
    }
    Ok(())
}

/// Smooth L1 (Huber-style) loss: quadratic below `beta`, linear above.
pub fn smooth_l1(pred: f64, target: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let d = (pred - target).abs();
    Ok(if d < beta { 0.5 * d * d / beta } else { d - 0.5 * beta })
}

/// Derivative of [`smooth_l1`] with respect to `pred`.
pub fn smooth_l1_grad(pred: f64, target: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let d = pred - target;
    Ok(if d.abs() < beta { d / beta } else { d.signum() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert_eq!(smooth_l1(1.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(smooth_l1(0.5, 0.0, 1.0).unwrap(), 0.125);
        assert_eq!(smooth_l1(2.0, 0.0, 1.0).unwrap(), 1.5);
    }

    #[test]
    fn rejects_non_positive_beta() {
        assert!(matches!(smooth_l1(0.0, 0.0, 0.0), Err(Error::Config(_))));
        assert!(matches!(smooth_l1(0.0, 0.0, -1.0), Err(Error::Config(_))));
        assert!(smooth_l1_grad(0.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn continuous_at_beta() {
        for beta in [0.1, 1.0, 3.5] {
            let below = smooth_l1(beta * (1.0 - 1e-12), 0.0, beta).unwrap();
            let at = smooth_l1(beta, 0.0, beta).unwrap();
            assert!((at - 0.5 * beta).abs() < 1e-15);
            assert!((below - 0.5 * beta).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_difference(d in -5.0f64..5.0, beta in 0.05f64..3.0) {
            prop_assume!((d.abs() - beta).abs() > 1e-3);
            let h = 1e-6;
            let fd = (smooth_l1(d + h, 0.0, beta).unwrap() - smooth_l1(d - h, 0.0, beta).unwrap()) / (2.0 * h);
            prop_assert!((fd - smooth_l1_grad(d, 0.0, beta).unwrap()).abs() < 1e-6);
        }
    }
}
