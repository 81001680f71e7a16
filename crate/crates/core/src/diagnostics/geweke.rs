use super::{mean, sample_variance};
use crate::error::{Error, Result};

/// Number of non-overlapping batches used for spectral density estimates.
pub const GEWEKE_BATCHES: usize = 20;
const MIN_SEGMENT: usize = 50;

/// Spectral density at frequency zero by non-overlapping batch means:
/// `b * Var(batch means)` with batch size `b = floor(n / 20)`. Trailing draws
/// that do not fill a batch are ignored.
pub fn batch_means_spectrum0(chain: &[f64]) -> Result<f64> {
    let b = chain.len() / GEWEKE_BATCHES;
    if b < 1 {
        return Err(Error::Structural(format!(
            "batch means need at least {GEWEKE_BATCHES} draws, got {}",
            chain.len()
        )));
    }
    let means: Vec<f64> = chain
        .chunks_exact(b)
        .take(GEWEKE_BATCHES)
        .map(mean)
        .collect();
    Ok(b as f64 * sample_variance(&means))
}

/// Geweke z-score comparing the first `first_frac` and last `last_frac` of
/// the chain.
pub fn geweke(chain: &[f64], first_frac: f64, last_frac: f64) -> Result<f64> {
    let n = chain.len();
    if !(first_frac > 0.0 && last_frac > 0.0 && first_frac + last_frac <= 1.0) {
        return Err(Error::Structural(format!(
            "Geweke fractions must be positive and non-overlapping, got {first_frac} and {last_frac}"
        )));
    }
    let n1 = (first_frac * n as f64).floor() as usize;
    let n2 = (last_frac * n as f64).floor() as usize;
    if n1 < MIN_SEGMENT || n2 < MIN_SEGMENT {
        return Err(Error::Structural(format!(
            "Geweke segments need at least {MIN_SEGMENT} draws each, got {n1} and {n2}"
        )));
    }
    let first = &chain[..n1];
    let last = &chain[n - n2..];
    let v1 = batch_means_spectrum0(first)? / n1 as f64;
    let v2 = batch_means_spectrum0(last)? / n2 as f64;
    let diff = mean(first) - mean(last);
    if diff == 0.0 {
        return Ok(0.0);
    }
    let se = (v1 + v2).sqrt();
    if !(se > 0.0) {
        return Err(Error::DegenerateVariance("Geweke segments have zero variance".into()));
    }
    Ok(diff / se)
}
