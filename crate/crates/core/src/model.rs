//! Hierarchical model: latent state, priors and the joint log-density.
//!
//! ```text
//! y_i = (A u)_i + eps_i
//! eps_i | z_i, w_i ~ N(Delta z_i, tau / w_i)
//! z_i | w_i        ~ HalfNormal(scale w_i^{-1/2})
//! w_i              ~ Gamma(nu/2, rate nu/2)
//! u ~ N(mu0, P0^{-1}),  Delta ~ N(0, delta_sd^2),  tau ~ InvGamma(a, b)
//! nu ~ lambda exp(-lambda (nu - 2)) on (2, inf)
//! ```

use std::f64::consts::LN_2;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::LinearForwardModel;
use crate::student_t::ln_gamma_unchecked;

/// Lower end of the open support of `nu`.
pub const NU_LOWER: f64 = 2.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// One full sampler state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalState {
    pub u: Vec<f64>,
    /// Half-normal scales, one per observation.
    pub z: Vec<f64>,
    /// Gamma mixing weights, one per observation.
    pub w: Vec<f64>,
    /// Half-normal loading `Delta`.
    pub delta: f64,
    pub tau: f64,
    pub nu: f64,
}

impl HierarchicalState {
    /// Returns a description of the first violated invariant, if any.
    pub fn invariant_violation(&self) -> Option<String> {
        if let Some(i) = self.u.iter().position(|v| !v.is_finite()) {
            return Some(format!("u[{i}] = {} is not finite", self.u[i]));
        }
        if let Some(i) = self.z.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Some(format!("z[{i}] = {} violates z >= 0", self.z[i]));
        }
        if let Some(i) = self.w.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Some(format!("w[{i}] = {} violates w > 0", self.w[i]));
        }
        if !self.delta.is_finite() {
            return Some(format!("Delta = {} is not finite", self.delta));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Some(format!("tau = {} violates tau > 0", self.tau));
        }
        if !(self.nu.is_finite() && self.nu > NU_LOWER) {
            return Some(format!("nu = {} violates nu > 2", self.nu));
        }
        None
    }

    pub fn is_valid(&self) -> bool {
        self.invariant_violation().is_none()
    }
}

/// Prior hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub u_mean: Vec<f64>,
    pub u_precision: DMatrix<f64>,
    pub delta_sd: f64,
    pub tau_shape: f64,
    pub tau_rate: f64,
    /// Rate of the exponential prior on `nu - 2`.
    pub nu_rate: f64,
}

pub const DEFAULT_U_PRECISION: f64 = 1e-2;
pub const DEFAULT_DELTA_SD: f64 = 10.0;
pub const DEFAULT_TAU_SHAPE: f64 = 0.01;
pub const DEFAULT_TAU_RATE: f64 = 0.01;
pub const DEFAULT_NU_RATE: f64 = 0.5;

impl PriorSpec {
    pub fn new(
        u_mean: Vec<f64>,
        u_precision: DMatrix<f64>,
        delta_sd: f64,
        tau_shape: f64,
        tau_rate: f64,
        nu_rate: f64,
    ) -> Result<Self> {
        let spec = PriorSpec {
            u_mean,
            u_precision,
            delta_sd,
            tau_shape,
            tau_rate,
            nu_rate,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Weakly informative defaults: `mu0 = 0`, `P0 = 1e-2 I`, `delta_sd = 10`,
    /// `a = b = 0.01`, `lambda = 0.5`.
    pub fn default_for(d: usize) -> Self {
        PriorSpec {
            u_mean: vec![0.0; d],
            u_precision: DMatrix::identity(d, d) * DEFAULT_U_PRECISION,
            delta_sd: DEFAULT_DELTA_SD,
            tau_shape: DEFAULT_TAU_SHAPE,
            tau_rate: DEFAULT_TAU_RATE,
            nu_rate: DEFAULT_NU_RATE,
        }
    }

    pub fn dim(&self) -> usize {
        self.u_mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.u_mean.len();
        if self.u_precision.shape() != (d, d) {
            return Err(Error::Dimension {
                context: "prior precision",
                expected: d,
                found: self.u_precision.nrows(),
            });
        }
        if self.u_mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("prior mean of u must be finite".into()));
        }
        let p = &self.u_precision;
        for i in 0..d {
            for j in 0..i {
                let tol = 1e-12 * (p[(i, j)].abs() + p[(j, i)].abs()).max(1.0);
                if (p[(i, j)] - p[(j, i)]).abs() > tol {
                    return Err(Error::Config(format!(
                        "prior precision is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if Cholesky::new(p.clone()).is_none() {
            return Err(Error::Config("prior precision is not positive definite".into()));
        }
        for (name, v) in [
            ("delta_sd", self.delta_sd),
            ("tau_shape", self.tau_shape),
            ("tau_rate", self.tau_rate),
            ("nu_rate", self.nu_rate),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// `kappa * D^T D + gamma * I` with `D` the `(d-2) x d` second-difference matrix.
pub fn smoothness_precision(d: usize, kappa: f64, gamma: f64) -> DMatrix<f64> {
    let mut p = DMatrix::identity(d, d) * gamma;
    if d >= 3 {
        let diff = DMatrix::from_fn(d - 2, d, |r, c| match c as isize - r as isize {
            0 | 2 => 1.0,
            1 => -2.0,
            _ => 0.0,
        });
        p += diff.transpose() * diff * kappa;
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedData {
    pub y: Vec<f64>,
    pub operator: LinearForwardModel,
}

impl ObservedData {
    pub fn new(y: Vec<f64>, operator: LinearForwardModel) -> Result<Self> {
        if y.len() != operator.rows() {
            return Err(Error::Dimension {
                context: "observations vs operator rows",
                expected: operator.rows(),
                found: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("observations must be finite".into()));
        }
        Ok(ObservedData { y, operator })
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.operator.cols()
    }
}

/// `ln lambda - lambda (nu - 2)` on `nu > 2`, `-inf` elsewhere.
pub fn nu_log_prior(nu: f64, spec: &PriorSpec) -> f64 {
    if nu > NU_LOWER && nu.is_finite() {
        spec.nu_rate.ln() - spec.nu_rate * (nu - NU_LOWER)
    } else {
        f64::NEG_INFINITY
    }
}

/// `eps = y - A u`.
pub fn residuals(state: &HierarchicalState, data: &ObservedData) -> Result<Vec<f64>> {
    let fitted = data.operator.apply(&state.u)?;
    Ok(data.y.iter().zip(fitted).map(|(y, f)| y - f).collect())
}

/// Log density of `w ~ Gamma(nu/2, rate nu/2)`.
pub fn mixing_log_density(w: f64, nu: f64) -> f64 {
    let h = 0.5 * nu;
    h * h.ln() - ln_gamma_unchecked(h) + (h - 1.0) * w.ln() - h * w
}

/// Individual additive pieces of the joint log-density.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTerms {
    /// `ln N(eps_i; Delta z_i, tau / w_i)`
    pub likelihood: Vec<f64>,
    /// `ln HalfNormal(z_i; w_i^{-1/2})`
    pub latent_z: Vec<f64>,
    /// `ln Gamma(w_i; nu/2, nu/2)`
    pub latent_w: Vec<f64>,
    pub u_prior: f64,
    pub delta_prior: f64,
    pub tau_prior: f64,
    pub nu_prior: f64,
}

impl JointTerms {
    pub fn total(&self) -> f64 {
        self.likelihood.iter().sum::<f64>()
            + self.latent_z.iter().sum::<f64>()
            + self.latent_w.iter().sum::<f64>()
            + self.u_prior
            + self.delta_prior
            + self.tau_prior
            + self.nu_prior
    }
}

fn check_dims(state: &HierarchicalState, data: &ObservedData, spec: &PriorSpec) -> Result<()> {
    let n = data.n_obs();
    for (context, found) in [("latent z", state.z.len()), ("latent w", state.w.len())] {
        if found != n {
            return Err(Error::Dimension { context, expected: n, found });
        }
    }
    if spec.dim() != data.dim() {
        return Err(Error::Dimension {
            context: "prior dimension",
            expected: data.dim(),
            found: spec.dim(),
        });
    }
    Ok(())
}

/// Gaussian log-density of `u` under the prior.
pub fn u_log_prior(u: &[f64], spec: &PriorSpec) -> Result<f64> {
    let chol = Cholesky::new(spec.u_precision.clone())
        .ok_or_else(|| Error::Decomposition("prior precision".into()))?;
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let diff = DVector::from_iterator(u.len(), u.iter().zip(&spec.u_mean).map(|(a, b)| a - b));
    let quad = diff.dot(&(&spec.u_precision * &diff));
    Ok(0.5 * log_det - u.len() as f64 * LN_SQRT_2PI - 0.5 * quad)
}

/// Term-by-term joint log-density. Fails only on dimension mismatch; an
/// out-of-support state is reported through [`joint_log_density`].
pub fn joint_terms(
    state: &HierarchicalState,
    data: &ObservedData,
    spec: &PriorSpec,
) -> Result<JointTerms> {
    check_dims(state, data, spec)?;
    let eps = residuals(state, data)?;
    let tau = state.tau;

    let likelihood = eps
        .iter()
        .zip(&state.z)
        .zip(&state.w)
        .map(|((e, z), w)| {
            let r = e - state.delta * z;
            -LN_SQRT_2PI + 0.5 * (w / tau).ln() - 0.5 * w * r * r / tau
        })
        .collect();
    let latent_z = state
        .z
        .iter()
        .zip(&state.w)
        .map(|(z, w)| LN_2 - LN_SQRT_2PI + 0.5 * w.ln() - 0.5 * w * z * z)
        .collect();
    let latent_w = state
        .w
        .iter()
        .map(|&w| mixing_log_density(w, state.nu))
        .collect();

    let sd = spec.delta_sd;
    let delta_prior = -LN_SQRT_2PI - sd.ln() - 0.5 * (state.delta / sd).powi(2);
    let (a, b) = (spec.tau_shape, spec.tau_rate);
    let tau_prior = a * b.ln() - ln_gamma_unchecked(a) - (a + 1.0) * tau.ln() - b / tau;

    Ok(JointTerms {
        likelihood,
        latent_z,
        latent_w,
        u_prior: u_log_prior(&state.u, spec)?,
        delta_prior,
        tau_prior,
        nu_prior: nu_log_prior(state.nu, spec),
    })
}

/// Unnormalized log posterior of the full state; `-inf` outside the support.
pub fn joint_log_density(
    state: &HierarchicalState,
    data: &ObservedData,
    spec: &PriorSpec,
) -> Result<f64> {
    check_dims(state, data, spec)?;
    if !state.is_valid() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(joint_terms(state, data, spec)?.total())
}
