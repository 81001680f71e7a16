//! Normal distribution helpers and the lower-truncated normal sampler.

use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use statrs::function::erf::{erfc, erfc_inv};

/// Standardized truncation points beyond this use exponential rejection.
pub const TAIL_SWITCH: f64 = 5.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `ln Phi(x)`, with an asymptotic series once `erfc` underflows.
pub fn ln_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        norm_cdf(x).ln()
    } else {
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - LN_SQRT_2PI + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

pub fn norm_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Draws `x ~ N(0, 1)` conditioned on `x >= lower`.
///
/// Inversion through the upper tail mass for `lower <= 5`; beyond that,
/// one-sided exponential rejection with the optimal rate.
pub fn std_normal_above<R: Rng + ?Sized>(rng: &mut R, lower: f64) -> f64 {
    if lower <= TAIL_SWITCH {
        let upper_mass = norm_cdf(-lower);
        let u: f64 = rng.random();
        // open interval so the quantile stays finite
        let p = (u * upper_mass).max(f64::MIN_POSITIVE);
        (-norm_quantile(p)).max(lower)
    } else {
        let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
        let exp = Exp::new(rate).expect("positive rate");
        loop {
            let x = lower + exp.sample(rng);
            let u: f64 = rng.random();
            if u <= (-0.5 * (x - rate) * (x - rate)).exp() {
                return x;
            }
        }
    }
}

/// `N(mean, sd^2)` truncated to `[0, inf)`.
pub fn normal_truncated_at_zero<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    let x = std_normal_above(rng, -mean / sd);
    (mean + sd * x).max(0.0)
}

/// Log density of `N(mean, sd^2)` truncated to `[0, inf)` at `x >= 0`.
pub fn ln_normal_truncated_at_zero(x: f64, mean: f64, sd: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    let r = (x - mean) / sd;
    -LN_SQRT_2PI - sd.ln() - 0.5 * r * r - ln_norm_cdf(mean / sd)
}
