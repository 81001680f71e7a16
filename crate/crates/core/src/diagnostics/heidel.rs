use std::f64::consts::PI;

use super::geweke::batch_means_spectrum0;
use super::mean;
use crate::error::{Error, Result};
use crate::student_t::ln_gamma_unchecked;

pub const HW_MIN_LEN: usize = 500;
/// Fraction of the chain discarded per restart, and the discard cap.
const HW_STEP: f64 = 0.1;
const HW_MAX_DISCARD: f64 = 0.5;
/// Relative halfwidth is undefined below this mean magnitude.
pub const HW_MEAN_FLOOR: f64 = 1e-8;
const CVM_MAX_TERMS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeidelbergerWelch {
    pub stationary: bool,
    pub p_value: f64,
    /// Index of the first retained draw.
    pub start: usize,
    pub mean: f64,
    pub halfwidth: f64,
    pub halfwidth_ok: bool,
}

/// `exp(-x) K_nu(x)` from `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt`.
/// The integrand decays doubly exponentially, so the trapezoid rule converges
/// geometrically.
fn scaled_bessel_k(nu: f64, x: f64) -> f64 {
    let upper = (760.0 / x).max(1.0).acosh() + 1.0;
    let h = 2e-3;
    let steps = (upper / h).ceil() as usize;
    let f = |t: f64| (-x * (t.cosh() + 1.0)).exp() * (nu * t).cosh();
    let mut s = 0.5 * f(0.0);
    for i in 1..=steps {
        s += f(i as f64 * h);
    }
    s * h
}

/// Distribution function of `int_0^1 B(t)^2 dt` for a Brownian bridge `B`
/// (the asymptotic Cramer-von Mises law), by the Bessel-K series of
/// Anderson and Darling.
pub fn cramer_von_mises_cdf(q: f64) -> f64 {
    if !(q > 0.0) {
        return 0.0;
    }
    // upper tail is below 1e-20 here
    if q > 10.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 0..CVM_MAX_TERMS {
        let k = k as f64;
        let u = (4.0 * k + 1.0).powi(2) / (16.0 * q);
        if u > 700.0 {
            break;
        }
        let coef = (ln_gamma_unchecked(k + 0.5) - ln_gamma_unchecked(k + 1.0)).exp() * (4.0 * k + 1.0).sqrt()
            / (PI.powf(1.5) * q.sqrt());
        let term = coef * scaled_bessel_k(0.25, u);
        s += term;
    }
    s.clamp(0.0, 1.0)
}

/// Heidelberger-Welch stationarity and halfwidth tests.
///
/// The spectral density at zero is estimated once on the second half of the
/// chain. The Cramer-von Mises statistic of the scaled cumulative-sum bridge
/// is tested on the whole chain, then after discarding 10%, 20%, ... up to
/// 50%; the first passing start is kept. The halfwidth test runs on the
/// retained part and passes when `1.96 sqrt(S0 / m) <= tol |mean|`.
pub fn heidelberger_welch(chain: &[f64], alpha: f64, halfwidth_tol: f64) -> Result<HeidelbergerWelch> {
    let n = chain.len();
    if n < HW_MIN_LEN {
        return Err(Error::Structural(format!(
            "Heidelberger-Welch needs at least {HW_MIN_LEN} draws, got {n}"
        )));
    }
    let s0 = batch_means_spectrum0(&chain[n / 2..])?;
    if !(s0 > 0.0) {
        return Err(Error::DegenerateVariance("spectral density at zero is zero".into()));
    }

    let mut p_value = 0.0;
    let mut start = 0;
    let mut stationary = false;
    let restarts = (HW_MAX_DISCARD / HW_STEP).round() as usize;
    for k in 0..=restarts {
        start = (k as f64 * HW_STEP * n as f64).floor() as usize;
        let y = &chain[start..];
        let m = y.len() as f64;
        let ybar = mean(y);
        let mut cum = 0.0;
        let mut sum_sq = 0.0;
        for &v in y {
            cum += v - ybar;
            sum_sq += cum * cum;
        }
        let stat = sum_sq / (m * m * s0);
        p_value = 1.0 - cramer_von_mises_cdf(stat);
        if p_value >= alpha {
            stationary = true;
            break;
        }
    }

    let retained = &chain[start..];
    let m = mean(retained);
    let (halfwidth, halfwidth_ok) = if stationary {
        let hw = 1.96 * (batch_means_spectrum0(retained)? / retained.len() as f64).sqrt();
        (hw, m.abs() >= HW_MEAN_FLOOR && hw <= halfwidth_tol * m.abs())
    } else {
        (f64::NAN, false)
    };
    Ok(HeidelbergerWelch {
        stationary,
        p_value,
        start,
        mean: m,
        halfwidth,
        halfwidth_ok,
    })
}
