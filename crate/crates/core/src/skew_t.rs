//! The skew-t noise law: density, the (sigma, alpha) <-> (Delta, tau)
//! reparameterization, and a sampler built on the Gamma/half-normal
//! stochastic representation.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::student_t::{t_log_cdf, t_log_pdf, Dof};

/// `|delta|` is clamped to this before mapping back to `alpha`.
pub const DELTA_CLAMP: f64 = 1.0 - 1e-12;

/// Direct parameterization of the skew-t noise law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewTParams {
    pub sigma: f64,
    pub alpha: f64,
    pub nu: Dof,
}

impl SkewTParams {
    pub fn new(sigma: f64, alpha: f64, nu: f64) -> Result<Self> {
        let p = SkewTParams {
            sigma,
            alpha,
            nu: Dof::new(nu)?,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks `sigma > 0` and finiteness; useful after deserialization.
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Domain(format!(
                "skew-t scale sigma must be finite and > 0, got {}",
                self.sigma
            )));
        }
        if !self.alpha.is_finite() {
            return Err(Error::Domain(format!(
                "skew-t shape alpha must be finite, got {}",
                self.alpha
            )));
        }
        Dof::new(self.nu.get()).map(|_| ())
    }
}

/// Parameters of the latent representation.
///
/// `unit_delta` is `delta = alpha / sqrt(1 + alpha^2)`, `delta` is the
/// half-normal loading `Delta = sigma * delta` and `tau = sigma^2 (1 - delta^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentParams {
    pub unit_delta: f64,
    pub delta: f64,
    pub tau: f64,
}

pub fn delta_of_alpha(alpha: f64) -> f64 {
    alpha / alpha.mul_add(alpha, 1.0).sqrt()
}

pub fn to_latent(p: &SkewTParams) -> LatentParams {
    let unit_delta = delta_of_alpha(p.alpha);
    // 1 - delta^2 = 1 / (1 + alpha^2), without cancellation
    let one_minus_d2 = 1.0 / p.alpha.mul_add(p.alpha, 1.0);
    LatentParams {
        unit_delta,
        delta: p.sigma * unit_delta,
        tau: p.sigma * p.sigma * one_minus_d2,
    }
}

pub fn from_latent(l: &LatentParams, nu: Dof) -> Result<SkewTParams> {
    if !(l.tau.is_finite() && l.tau > 0.0) {
        return Err(Error::Domain(format!("tau must be > 0, got {}", l.tau)));
    }
    if !l.delta.is_finite() {
        return Err(Error::Domain(format!("Delta must be finite, got {}", l.delta)));
    }
    let sigma = l.delta.hypot(l.tau.sqrt());
    let unit_delta = (l.delta / sigma).clamp(-DELTA_CLAMP, DELTA_CLAMP);
    let alpha = unit_delta / ((1.0 - unit_delta) * (1.0 + unit_delta)).sqrt();
    Ok(SkewTParams { sigma, alpha, nu })
}

/// Log of `(2/sigma) t(x; nu) T(alpha x sqrt((nu+1)/(nu+x^2)); nu+1)`,
/// `x = eps / sigma`.
pub fn skew_t_logpdf(eps: f64, p: &SkewTParams) -> Result<f64> {
    let nu = p.nu.get();
    let x = eps / p.sigma;
    let arg = p.alpha * x * ((nu + 1.0) / (nu + x * x)).sqrt();
    Ok(std::f64::consts::LN_2 - p.sigma.ln()
        + t_log_pdf(x, p.nu)?
        + t_log_cdf(arg, Dof::new(nu + 1.0)?)?)
}

/// One skew-t draw through `w ~ Gamma(nu/2, nu/2)`, `z = w^{-1/2}|M|`,
/// `eps = Delta z + w^{-1/2} tau^{1/2} N`.
pub fn draw_skew_t<R: Rng + ?Sized>(rng: &mut R, latent: &LatentParams, mixing: &Gamma<f64>) -> f64 {
    let w = mixing.sample(rng);
    let m: f64 = rng.sample(StandardNormal);
    let n: f64 = rng.sample(StandardNormal);
    let inv_sqrt_w = w.sqrt().recip();
    latent.delta * inv_sqrt_w * m.abs() + inv_sqrt_w * latent.tau.sqrt() * n
}

/// `Gamma(nu/2, rate nu/2)` mixing law.
pub fn mixing_distribution(nu: Dof) -> Gamma<f64> {
    let half = 0.5 * nu.get();
    Gamma::new(half, half.recip()).expect("nu > 0 gives a valid gamma law")
}

pub fn sample_skew_t(n: usize, p: &SkewTParams, seed: u64) -> Vec<f64> {
    let mut rng = crate::seeded_rng(seed);
    let latent = to_latent(p);
    let mixing = mixing_distribution(p.nu);
    (0..n)
        .map(|_| draw_skew_t(&mut rng, &latent, &mixing))
        .collect()
}
