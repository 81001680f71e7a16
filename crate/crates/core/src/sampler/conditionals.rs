//! Full conditional distributions of every Gibbs block.
//!
//! Each conditional exposes `log_density` so that tests can check
//! `log q(x'|rest) - log q(x|rest) = joint(x') - joint(x)` block by block.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::SamplerConfig;
use super::truncnorm::{ln_normal_truncated_at_zero, normal_truncated_at_zero};
use crate::error::{Error, Result};
use crate::model::{mixing_log_density, nu_log_prior, residuals, HierarchicalState, ObservedData, PriorSpec, NU_LOWER};
use crate::student_t::ln_gamma_unchecked;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Diagonal jitter used for the single retry of a failed factorization.
pub const CHOLESKY_JITTER: f64 = 1e-10;

/// Gaussian conditional of `u` in precision form.
#[derive(Debug, Clone)]
pub struct GaussianConditional {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl GaussianConditional {
    pub fn log_density(&self, u: &[f64]) -> f64 {
        let diff = DVector::from_iterator(u.len(), u.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        let log_det: f64 = 2.0 * self.chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        0.5 * log_det - u.len() as f64 * LN_SQRT_2PI - 0.5 * diff.dot(&(&self.precision * &diff))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.mean.len();
        let xi = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        // u = m + L^{-T} xi has covariance (L L^T)^{-1}
        let step = self
            .chol
            .l()
            .transpose()
            .solve_upper_triangular(&xi)
            .expect("Cholesky factor has a positive diagonal");
        (&self.mean + step).iter().copied().collect()
    }
}

/// `N(mean, sd^2)` truncated to `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    pub mean: f64,
    pub sd: f64,
}

impl TruncatedNormal {
    pub fn log_density(&self, x: f64) -> f64 {
        ln_normal_truncated_at_zero(x, self.mean, self.sd)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        normal_truncated_at_zero(rng, self.mean, self.sd)
    }
}

/// Gamma law in shape/rate form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaConditional {
    pub shape: f64,
    pub rate: f64,
}

impl GammaConditional {
    pub fn log_density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() - ln_gamma_unchecked(self.shape) + (self.shape - 1.0) * x.ln()
            - self.rate * x
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Gamma::new(self.shape, self.rate.recip())
            .expect("shape and rate are positive")
            .sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalConditional {
    pub mean: f64,
    pub sd: f64,
}

impl NormalConditional {
    pub fn log_density(&self, x: f64) -> f64 {
        let r = (x - self.mean) / self.sd;
        -LN_SQRT_2PI - self.sd.ln() - 0.5 * r * r
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.mean + self.sd * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Inverse-gamma law in shape/rate form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGammaConditional {
    pub shape: f64,
    pub rate: f64,
}

impl InvGammaConditional {
    pub fn log_density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() - ln_gamma_unchecked(self.shape) - (self.shape + 1.0) * x.ln()
            - self.rate / x
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = Gamma::new(self.shape, self.rate.recip())
            .expect("shape and rate are positive")
            .sample(rng);
        g.recip()
    }
}

fn factor_with_retry(precision: DMatrix<f64>) -> Result<(DMatrix<f64>, Cholesky<f64, Dyn>)> {
    if let Some(c) = Cholesky::new(precision.clone()) {
        return Ok((precision, c));
    }
    let d = precision.nrows();
    let jittered = precision + DMatrix::identity(d, d) * CHOLESKY_JITTER;
    match Cholesky::new(jittered.clone()) {
        Some(c) => Ok((jittered, c)),
        None => Err(Error::Decomposition(
            "conditional precision of u is not positive definite".into(),
        )),
    }
}

/// `u | rest ~ N(m, Q^{-1})`, `Q = P0 + A^T W A / tau`,
/// `Q m = P0 mu0 + A^T W (y - Delta z) / tau`.
pub fn u_conditional(
    state: &HierarchicalState,
    data: &ObservedData,
    spec: &PriorSpec,
) -> Result<GaussianConditional> {
    let a = data.operator.matrix();
    let (n, d) = a.shape();
    let inv_tau = state.tau.recip();
    let sqrt_w = DVector::from_iterator(n, state.w.iter().map(|w| w.sqrt()));
    let weighted = DMatrix::from_fn(n, d, |i, j| sqrt_w[i] * a[(i, j)]);
    let precision = &spec.u_precision + weighted.tr_mul(&weighted) * inv_tau;

    let target = DVector::from_iterator(
        n,
        (0..n).map(|i| state.w[i] * (data.y[i] - state.delta * state.z[i]) * inv_tau),
    );
    let prior_mean = DVector::from_column_slice(&spec.u_mean);
    let rhs = &spec.u_precision * prior_mean + a.tr_mul(&target);

    let (precision, chol) = factor_with_retry(precision)?;
    let mean = chol.solve(&rhs);
    Ok(GaussianConditional {
        mean,
        precision,
        chol,
    })
}

/// `z_i | rest ~ N(Delta eps_i / (tau + Delta^2), tau / (w_i (tau + Delta^2)))` on `[0, inf)`.
pub fn z_conditional(state: &HierarchicalState, eps: f64, i: usize) -> TruncatedNormal {
    let denom = state.tau + state.delta * state.delta;
    TruncatedNormal {
        mean: state.delta * eps / denom,
        sd: (state.tau / (state.w[i] * denom)).sqrt(),
    }
}

/// `w_i | rest ~ Gamma(nu/2 + 1, [nu + z_i^2 + (eps_i - Delta z_i)^2 / tau] / 2)`.
pub fn w_conditional(state: &HierarchicalState, eps: f64, i: usize) -> GammaConditional {
    let z = state.z[i];
    let r = eps - state.delta * z;
    GammaConditional {
        shape: 0.5 * state.nu + 1.0,
        rate: 0.5 * (state.nu + z * z + r * r / state.tau),
    }
}

/// Conjugate Gaussian conditional of `Delta`.
pub fn delta_conditional(state: &HierarchicalState, eps: &[f64], spec: &PriorSpec) -> NormalConditional {
    let inv_tau = state.tau.recip();
    let (mut szz, mut sze) = (0.0, 0.0);
    for ((e, z), w) in eps.iter().zip(&state.z).zip(&state.w) {
        szz += w * z * z;
        sze += w * z * e;
    }
    let precision = spec.delta_sd.powi(-2) + szz * inv_tau;
    NormalConditional {
        mean: sze * inv_tau / precision,
        sd: precision.sqrt().recip(),
    }
}

/// `tau | rest ~ InvGamma(a + n/2, b + sum w_i (eps_i - Delta z_i)^2 / 2)`.
pub fn tau_conditional(state: &HierarchicalState, eps: &[f64], spec: &PriorSpec) -> InvGammaConditional {
    let ss: f64 = eps
        .iter()
        .zip(&state.z)
        .zip(&state.w)
        .map(|((e, z), w)| {
            let r = e - state.delta * z;
            w * r * r
        })
        .sum();
    InvGammaConditional {
        shape: spec.tau_shape + 0.5 * eps.len() as f64,
        rate: spec.tau_rate + 0.5 * ss,
    }
}

/// Unnormalized log conditional of `nu`: prior plus the gamma mixing terms.
pub fn nu_log_target(nu: f64, w: &[f64], spec: &PriorSpec) -> f64 {
    let prior = nu_log_prior(nu, spec);
    if prior == f64::NEG_INFINITY {
        return prior;
    }
    prior + w.iter().map(|&wi| mixing_log_density(wi, nu)).sum::<f64>()
}

/// Log acceptance ratio of the random walk on `eta = ln(nu - 2)`, including
/// the Jacobian `(nu' - 2) / (nu - 2)`.
pub fn nu_log_acceptance(nu: f64, proposed: f64, w: &[f64], spec: &PriorSpec) -> f64 {
    nu_log_target(proposed, w, spec) - nu_log_target(nu, w, spec)
        + ((proposed - NU_LOWER) / (nu - NU_LOWER)).ln()
}

pub(crate) fn draw_u<R: Rng + ?Sized>(
    state: &HierarchicalState,
    data: &ObservedData,
    spec: &PriorSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(u_conditional(state, data, spec)?.sample(rng))
}

pub(crate) fn draw_z<R: Rng + ?Sized>(state: &HierarchicalState, eps: &[f64], rng: &mut R) -> Vec<f64> {
    eps.iter()
        .enumerate()
        .map(|(i, &e)| z_conditional(state, e, i).sample(rng))
        .collect()
}

pub(crate) fn draw_w<R: Rng + ?Sized>(state: &HierarchicalState, eps: &[f64], rng: &mut R) -> Vec<f64> {
    eps.iter()
        .enumerate()
        .map(|(i, &e)| w_conditional(state, e, i).sample(rng))
        .collect()
}

/// One Metropolis step for `nu`; returns the new value and whether it moved.
pub(crate) fn step_nu<R: Rng + ?Sized>(
    nu: f64,
    w: &[f64],
    spec: &PriorSpec,
    proposal_sd: f64,
    rng: &mut R,
) -> (f64, bool) {
    let eta = (nu - NU_LOWER).ln();
    let step: f64 = rng.sample(StandardNormal);
    let eta_new = eta + proposal_sd * step;
    if eta_new == eta {
        return (nu, true);
    }
    let proposed = NU_LOWER + eta_new.exp();
    if !(proposed > NU_LOWER && proposed.is_finite()) {
        return (nu, false);
    }
    let log_ratio = nu_log_target(proposed, w, spec) - nu_log_target(nu, w, spec) + (eta_new - eta);
    let u: f64 = rng.random();
    if u.ln() < log_ratio {
        (proposed, true)
    } else {
        (nu, false)
    }
}

/// Draws a new `u` from its full conditional.
pub fn update_u<R: Rng + ?Sized>(
    state: &HierarchicalState,
    data: &ObservedData,
    spec: &PriorSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    draw_u(state, data, spec, rng)
}

pub fn update_z<R: Rng + ?Sized>(state: &HierarchicalState, data: &ObservedData, rng: &mut R) -> Result<Vec<f64>> {
    let eps = residuals(state, data)?;
    Ok(draw_z(state, &eps, rng))
}

pub fn update_w<R: Rng + ?Sized>(state: &HierarchicalState, data: &ObservedData, rng: &mut R) -> Result<Vec<f64>> {
    let eps = residuals(state, data)?;
    Ok(draw_w(state, &eps, rng))
}

pub fn update_delta<R: Rng + ?Sized>(
    state: &HierarchicalState,
    data: &ObservedData,
    spec: &PriorSpec,
    rng: &mut R,
) -> Result<f64> {
    let eps = residuals(state, data)?;
    Ok(delta_conditional(state, &eps, spec).sample(rng))
}

pub fn update_tau<R: Rng + ?Sized>(
    state: &HierarchicalState,
    data: &ObservedData,
    spec: &PriorSpec,
    rng: &mut R,
) -> Result<f64> {
    let eps = residuals(state, data)?;
    Ok(tau_conditional(state, &eps, spec).sample(rng))
}

/// Random-walk Metropolis update of `nu` on the `ln(nu - 2)` scale.
pub fn update_nu_metropolis<R: Rng + ?Sized>(
    state: &HierarchicalState,
    spec: &PriorSpec,
    config: &SamplerConfig,
    rng: &mut R,
) -> (f64, bool) {
    step_nu(state.nu, &state.w, spec, config.nu_proposal_sd, rng)
}
