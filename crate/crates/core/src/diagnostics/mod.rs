//! Convergence diagnostics and WAIC.
//!
//! All functions operate on a single scalar chain (or, for WAIC, a
//! draws-by-observations matrix of pointwise log-likelihoods).

mod autocorr;
mod geweke;
mod heidel;
mod waic;

pub use autocorr::{autocorrelation, ess};
pub use geweke::{batch_means_spectrum0, geweke, GEWEKE_BATCHES};
pub use heidel::{cramer_von_mises_cdf, heidelberger_welch, HeidelbergerWelch};
pub use waic::{waic, WaicResult};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Tunable settings of the per-parameter report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticSettings {
    pub geweke_first: f64,
    pub geweke_last: f64,
    pub hw_alpha: f64,
    pub hw_halfwidth_tol: f64,
    pub max_lag: usize,
}

impl Default for DiagnosticSettings {
    fn default() -> Self {
        DiagnosticSettings {
            geweke_first: 0.1,
            geweke_last: 0.5,
            hw_alpha: 0.05,
            hw_halfwidth_tol: 0.1,
            max_lag: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDiagnostics {
    pub name: String,
    pub ess: f64,
    pub geweke_z: f64,
    pub hw_stationary: bool,
    pub hw_p: f64,
    pub hw_halfwidth_ok: bool,
    /// Lags `1..=max_lag`.
    pub autocorrelations: Vec<f64>,
}

pub type DiagnosticsReport = Vec<ParameterDiagnostics>;

pub fn diagnose(name: &str, chain: &[f64], settings: &DiagnosticSettings) -> Result<ParameterDiagnostics> {
    let max_lag = settings.max_lag.min(chain.len() / 2);
    let acf = autocorrelation(chain, max_lag)?;
    let hw = heidelberger_welch(chain, settings.hw_alpha, settings.hw_halfwidth_tol)?;
    Ok(ParameterDiagnostics {
        name: name.to_string(),
        ess: ess(chain)?,
        geweke_z: geweke(chain, settings.geweke_first, settings.geweke_last)?,
        hw_stationary: hw.stationary,
        hw_p: hw.p_value,
        hw_halfwidth_ok: hw.halfwidth_ok,
        autocorrelations: acf[1..].to_vec(),
    })
}

/// Merges per-chain diagnostics of one parameter: ESS is summed, the Geweke
/// score with the largest magnitude is kept, the smallest HW p-value is
/// kept, and pass flags must hold in every chain. Autocorrelations are
/// averaged.
pub fn combine_chains(per_chain: &[ParameterDiagnostics]) -> Option<ParameterDiagnostics> {
    let first = per_chain.first()?;
    let lags = first.autocorrelations.len();
    let k = per_chain.len() as f64;
    Some(ParameterDiagnostics {
        name: first.name.clone(),
        ess: per_chain.iter().map(|p| p.ess).sum(),
        geweke_z: per_chain
            .iter()
            .map(|p| p.geweke_z)
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0),
        hw_stationary: per_chain.iter().all(|p| p.hw_stationary),
        hw_p: per_chain.iter().map(|p| p.hw_p).fold(f64::NAN, f64::min),
        hw_halfwidth_ok: per_chain.iter().all(|p| p.hw_halfwidth_ok),
        autocorrelations: (0..lags)
            .map(|l| per_chain.iter().map(|p| p.autocorrelations.get(l).copied().unwrap_or(0.0)).sum::<f64>() / k)
            .collect(),
    })
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}
