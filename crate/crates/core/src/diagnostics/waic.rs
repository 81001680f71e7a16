use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaicResult {
    pub lppd: f64,
    pub p_waic: f64,
    /// `-2 (lppd - p_waic)`
    pub waic: f64,
}

/// WAIC from an `S x n` matrix of pointwise log-likelihoods.
pub fn waic(pointwise_loglik: &DMatrix<f64>) -> Result<WaicResult> {
    let (s, _) = pointwise_loglik.shape();
    if s < 2 {
        return Err(Error::Structural(format!("WAIC needs at least 2 draws, got {s}")));
    }
    if pointwise_loglik.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("pointwise log-likelihoods must be finite".into()));
    }
    let ln_s = (s as f64).ln();
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    for col in pointwise_loglik.column_iter() {
        let max = col.max();
        let sum_exp: f64 = col.iter().map(|v| (v - max).exp()).sum();
        lppd += max + sum_exp.ln() - ln_s;
        let m = col.mean();
        p_waic += col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (s as f64 - 1.0);
    }
    Ok(WaicResult {
        lppd,
        p_waic,
        waic: -2.0 * (lppd - p_waic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_rows() {
        let row = [-1.2, -0.3, -4.0];
        let m = DMatrix::from_fn(5, 3, |_, j| row[j]);
        let r = waic(&m).unwrap();
        assert_eq!(r.p_waic, 0.0);
        assert!((r.lppd - row.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_two_by_one() {
        let (a, b) = (0.5f64.ln(), 0.25f64.ln());
        let m = DMatrix::from_row_slice(2, 1, &[a, b]);
        let r = waic(&m).unwrap();
        assert!((r.lppd - 0.375f64.ln()).abs() < 1e-14);
        let mean = 0.5 * (a + b);
        let var = (a - mean).powi(2) + (b - mean).powi(2);
        assert!((r.p_waic - var).abs() < 1e-14);
        assert!((r.waic + 2.0 * (r.lppd - r.p_waic)).abs() < 1e-14);
    }

    #[test]
    fn stable_for_very_negative_values() {
        let m = DMatrix::from_row_slice(2, 1, &[-2000.0, -2001.0]);
        let r = waic(&m).unwrap();
        assert!(r.lppd.is_finite());
    }

    #[test]
    fn errors() {
        assert!(matches!(waic(&DMatrix::zeros(1, 4)), Err(Error::Structural(_))));
        let mut m = DMatrix::zeros(3, 2);
        m[(1, 1)] = f64::NEG_INFINITY;
        assert!(waic(&m).is_err());
    }
}
