//! Metropolis-within-Gibbs sampler over [`HierarchicalState`].
//!
//! One sweep updates the blocks in the fixed order `u -> z -> w -> Delta -> tau -> nu`.
//! Every block except `nu` is drawn exactly from its conjugate conditional;
//! `nu` takes a random-walk Metropolis step on `ln(nu - 2)`.

pub mod conditionals;
pub mod truncnorm;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use conditionals::{
    delta_conditional, nu_log_acceptance, nu_log_target, tau_conditional, u_conditional, update_delta,
    update_nu_metropolis, update_tau, update_u, update_w, update_z, w_conditional, z_conditional,
};

use crate::error::{Error, Result};
use crate::model::{residuals, HierarchicalState, ObservedData, PriorSpec, NU_LOWER};
use crate::skew_t::{from_latent, skew_t_logpdf, LatentParams};
use crate::student_t::Dof;

pub const DEFAULT_ITERATIONS: usize = 20_000;
pub const DEFAULT_CHAINS: usize = 4;
pub const DEFAULT_NU_PROPOSAL_SD: f64 = 0.5;
/// Degrees of freedom standing in for the Gaussian limit.
pub const GAUSSIAN_NU: f64 = 1e6;
/// Starting value of `nu` when it is sampled.
pub const INITIAL_NU: f64 = 10.0;

/// How `nu` is treated by the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuMode {
    Sampled,
    Fixed(f64),
}

impl fmt::Display for NuMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NuMode::Sampled => write!(f, "sampled"),
            NuMode::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

impl FromStr for NuMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "sampled" {
            return Ok(NuMode::Sampled);
        }
        let value = s
            .strip_prefix("fixed:")
            .ok_or_else(|| Error::Config(format!("nu mode must be 'sampled' or 'fixed:VALUE', got '{s}'")))?;
        let v: f64 = value
            .parse()
            .map_err(|_| Error::Config(format!("invalid fixed nu value '{value}'")))?;
        Ok(NuMode::Fixed(v))
    }
}

/// Whether the skewness loading `Delta` is sampled or pinned at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    #[default]
    Free,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub seed: u64,
    /// Random-walk scale on `ln(nu - 2)`.
    pub nu_proposal_sd: f64,
    pub nu_mode: NuMode,
    #[serde(default)]
    pub delta_mode: DeltaMode,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            iterations: DEFAULT_ITERATIONS,
            burn_in: DEFAULT_ITERATIONS / 4,
            thin: 1,
            chains: DEFAULT_CHAINS,
            seed: 0,
            nu_proposal_sd: DEFAULT_NU_PROPOSAL_SD,
            nu_mode: NuMode::Sampled,
            delta_mode: DeltaMode::Free,
        }
    }
}

impl SamplerConfig {
    /// Defaults with `iterations` set and burn-in at 25% of it.
    pub fn with_iterations(iterations: usize) -> Self {
        SamplerConfig {
            iterations,
            burn_in: iterations / 4,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be >= 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::Config("chains must be >= 1".into()));
        }
        if !(self.nu_proposal_sd.is_finite() && self.nu_proposal_sd >= 0.0) {
            return Err(Error::Config(format!(
                "nu_proposal_sd must be finite and >= 0, got {}",
                self.nu_proposal_sd
            )));
        }
        if let NuMode::Fixed(v) = self.nu_mode {
            if !(v.is_finite() && v > NU_LOWER) {
                return Err(Error::Config(format!(
                    "fixed nu must lie in the prior support (2, inf), got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Number of rows a chain keeps.
    pub fn kept(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }

    /// Configuration of chain `k`: identical except for `seed + k`.
    pub fn for_chain(&self, k: usize) -> SamplerConfig {
        SamplerConfig {
            seed: self.seed.wrapping_add(k as u64),
            ..self.clone()
        }
    }
}

/// Output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    /// 1-based sweep index of every kept row.
    pub iterations: Vec<usize>,
    /// Kept draws, columns `u_1..u_d, Delta, tau, nu`.
    pub draws: DMatrix<f64>,
    /// `ln p(y_i | u, sigma, alpha, nu)` under the marginal skew-t law.
    pub pointwise_loglik: DMatrix<f64>,
    pub accept_rate_nu: f64,
    pub seed_used: u64,
}

impl ChainOutput {
    pub fn dim(&self) -> usize {
        self.draws.ncols() - 3
    }

    pub fn kept(&self) -> usize {
        self.draws.nrows()
    }

    pub fn param_names(&self) -> Vec<String> {
        param_names(self.dim())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.column(j).iter().copied().collect()
    }

    pub fn delta_column(&self) -> Vec<f64> {
        self.column(self.dim())
    }

    pub fn tau_column(&self) -> Vec<f64> {
        self.column(self.dim() + 1)
    }

    pub fn nu_column(&self) -> Vec<f64> {
        self.column(self.dim() + 2)
    }

    /// Total log-likelihood of every kept row.
    pub fn loglik_totals(&self) -> Vec<f64> {
        self.pointwise_loglik.row_iter().map(|r| r.sum()).collect()
    }

    /// `||u||^2` of every kept row.
    pub fn u_norm2(&self) -> Vec<f64> {
        let d = self.dim();
        self.draws
            .row_iter()
            .map(|r| r.iter().take(d).map(|v| v * v).sum())
            .collect()
    }
}

pub fn param_names(d: usize) -> Vec<String> {
    (1..=d)
        .map(|j| format!("u_{j}"))
        .chain(["Delta".to_string(), "tau".to_string(), "nu".to_string()])
        .collect()
}

/// Starting state: `u = mu0`, `tau` = variance of the prior-mean residuals,
/// `z` at the half-normal mean, `w = 1`, `Delta = 0`.
pub fn initial_state(data: &ObservedData, spec: &PriorSpec, config: &SamplerConfig) -> Result<HierarchicalState> {
    let n = data.n_obs();
    let u = spec.u_mean.clone();
    let fitted = data.operator.apply(&u)?;
    let tau = if n >= 2 {
        let r: Vec<f64> = data.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
        let m = r.iter().sum::<f64>() / n as f64;
        r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        1.0
    };
    let nu = match config.nu_mode {
        NuMode::Sampled => INITIAL_NU,
        NuMode::Fixed(v) => v,
    };
    Ok(HierarchicalState {
        u,
        z: vec![(2.0 / std::f64::consts::PI).sqrt(); n],
        w: vec![1.0; n],
        delta: 0.0,
        tau: if tau.is_finite() && tau > 0.0 { tau } else { 1.0 },
        nu,
    })
}

/// One full sweep. Returns the residuals at the new `u` and whether a
/// proposed `nu` was accepted (`None` when `nu` is fixed).
fn sweep<R: rand::Rng + ?Sized>(
    state: &mut HierarchicalState,
    data: &ObservedData,
    spec: &PriorSpec,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<(Vec<f64>, Option<bool>)> {
    state.u = conditionals::draw_u(state, data, spec, rng)?;
    let eps = residuals(state, data)?;
    state.z = conditionals::draw_z(state, &eps, rng);
    state.w = conditionals::draw_w(state, &eps, rng);
    if config.delta_mode == DeltaMode::Free {
        state.delta = delta_conditional(state, &eps, spec).sample(rng);
    }
    state.tau = tau_conditional(state, &eps, spec).sample(rng);
    let accepted = match config.nu_mode {
        NuMode::Sampled => {
            let (nu, acc) = conditionals::step_nu(state.nu, &state.w, spec, config.nu_proposal_sd, rng);
            state.nu = nu;
            Some(acc)
        }
        NuMode::Fixed(_) => None,
    };
    Ok((eps, accepted))
}

/// `ln p(y_i | state)` with the latents integrated out.
pub fn pointwise_loglik(state: &HierarchicalState, eps: &[f64]) -> Result<Vec<f64>> {
    let latent = LatentParams {
        unit_delta: 0.0,
        delta: state.delta,
        tau: state.tau,
    };
    let params = from_latent(&latent, Dof::new(state.nu)?)?;
    eps.iter().map(|&e| skew_t_logpdf(e, &params)).collect()
}

fn check_inputs(data: &ObservedData, spec: &PriorSpec, config: &SamplerConfig) -> Result<()> {
    config.validate()?;
    spec.validate()?;
    if spec.dim() != data.dim() {
        return Err(Error::Dimension {
            context: "prior dimension vs operator columns",
            expected: data.dim(),
            found: spec.dim(),
        });
    }
    Ok(())
}

/// Runs one chain from [`initial_state`] with `config.seed`.
pub fn run_chain(data: &ObservedData, spec: &PriorSpec, config: &SamplerConfig) -> Result<ChainOutput> {
    check_inputs(data, spec, config)?;
    let state = initial_state(data, spec, config)?;
    run_chain_from(state, data, spec, config)
}

pub fn run_chain_from(
    mut state: HierarchicalState,
    data: &ObservedData,
    spec: &PriorSpec,
    config: &SamplerConfig,
) -> Result<ChainOutput> {
    check_inputs(data, spec, config)?;
    if let Some(reason) = state.invariant_violation() {
        return Err(Error::Invariant {
            iteration: 0,
            reason,
            state: Box::new(state),
        });
    }
    let mut rng = crate::seeded_rng(config.seed);
    let d = data.dim();
    let n = data.n_obs();
    let kept = config.kept();
    let mut draws = DMatrix::zeros(kept, d + 3);
    let mut loglik = DMatrix::zeros(kept, n);
    let mut iterations = Vec::with_capacity(kept);
    let mut accepted = 0usize;
    let mut proposals = 0usize;

    for t in 0..config.iterations {
        let (eps, acc) = sweep(&mut state, data, spec, config, &mut rng)?;
        if let Some(a) = acc {
            proposals += 1;
            accepted += usize::from(a);
        }
        if let Some(reason) = state.invariant_violation() {
            return Err(Error::Invariant {
                iteration: t + 1,
                reason,
                state: Box::new(state),
            });
        }
        if t >= config.burn_in && (t - config.burn_in).is_multiple_of(config.thin) {
            let row = iterations.len();
            for (j, v) in state.u.iter().enumerate() {
                draws[(row, j)] = *v;
            }
            draws[(row, d)] = state.delta;
            draws[(row, d + 1)] = state.tau;
            draws[(row, d + 2)] = state.nu;
            for (i, v) in pointwise_loglik(&state, &eps)?.into_iter().enumerate() {
                loglik[(row, i)] = v;
            }
            iterations.push(t + 1);
        }
    }

    Ok(ChainOutput {
        iterations,
        draws,
        pointwise_loglik: loglik,
        accept_rate_nu: if proposals == 0 {
            0.0
        } else {
            accepted as f64 / proposals as f64
        },
        seed_used: config.seed,
    })
}

/// Runs `config.chains` independent chains with seeds `seed + k`, in parallel.
/// The result is ordered by chain index and does not depend on scheduling.
pub fn run_multi(data: &ObservedData, spec: &PriorSpec, config: &SamplerConfig) -> Result<Vec<ChainOutput>> {
    check_inputs(data, spec, config)?;
    (0..config.chains)
        .into_par_iter()
        .map(|k| run_chain(data, spec, &config.for_chain(k)))
        .collect()
}
