use super::mean;
use crate::error::{Error, Result};

/// Minimum chain length accepted by [`ess`].
pub const ESS_MIN_LEN: usize = 100;

fn centered(chain: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = mean(chain);
    let c: Vec<f64> = chain.iter().map(|x| x - m).collect();
    let c0 = c.iter().map(|v| v * v).sum::<f64>() / chain.len() as f64;
    if !(c0 > 0.0) || chain.iter().all(|&x| x == chain[0]) {
        return Err(Error::DegenerateVariance("chain is constant".into()));
    }
    Ok((c, c0))
}

fn autocov(c: &[f64], lag: usize) -> f64 {
    c[..c.len() - lag]
        .iter()
        .zip(&c[lag..])
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / c.len() as f64
}

/// Biased (divide-by-n) autocorrelations at lags `0..=max_lag`.
pub fn autocorrelation(chain: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if chain.len() < 2 || chain.len() < 2 * max_lag {
        return Err(Error::Structural(format!(
            "autocorrelation to lag {max_lag} needs at least {} draws, got {}",
            (2 * max_lag).max(2),
            chain.len()
        )));
    }
    let (c, c0) = centered(chain)?;
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    out.extend((1..=max_lag).map(|k| autocov(&c, k) / c0));
    Ok(out)
}

/// Effective sample size `n / (1 + 2 sum rho_k)`, summing lags until the
/// first non-positive autocorrelation.
pub fn ess(chain: &[f64]) -> Result<f64> {
    let n = chain.len();
    if n < ESS_MIN_LEN {
        return Err(Error::Structural(format!(
            "ESS needs at least {ESS_MIN_LEN} draws, got {n}"
        )));
    }
    let (c, c0) = centered(chain)?;
    let mut sum = 0.0;
    for k in 1..n {
        let rho = autocov(&c, k) / c0;
        if rho <= 0.0 {
            break;
        }
        sum += rho;
    }
    Ok(n as f64 / (1.0 + 2.0 * sum))
}
