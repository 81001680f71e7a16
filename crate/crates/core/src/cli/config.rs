//! JSON run configuration.
//!
//! Every section has defaults, so `{"problem": {...}, "synthetic": {...}}` is
//! a complete file. [`RunConfig::resolve`] fills the derived values (burn-in,
//! synthetic seed) so the written `resolved_config.json` reproduces a run
//! bit for bit.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticSettings;
use crate::error::{Error, Result};
use crate::forward::{cauchy_laplace_operator, deconvolution_operator, LinearForwardModel};
use crate::io::read_operator_csv;
use crate::model::{
    smoothness_precision, PriorSpec, DEFAULT_DELTA_SD, DEFAULT_NU_RATE, DEFAULT_TAU_RATE, DEFAULT_TAU_SHAPE,
    DEFAULT_U_PRECISION,
};
use crate::sampler::{DeltaMode, NuMode, SamplerConfig, DEFAULT_CHAINS, DEFAULT_ITERATIONS, DEFAULT_NU_PROPOSAL_SD, GAUSSIAN_NU};
use crate::skew_t::SkewTParams;

/// Offset between the sampler seed and the default synthetic-noise seed.
pub const SYNTHETIC_SEED_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Problem {
    Deconvolution { grid: usize, kernel_sd: f64 },
    CauchyLaplace { grid: usize },
    External { operator_path: PathBuf },
}

impl Problem {
    pub fn build(&self) -> Result<LinearForwardModel> {
        match self {
            Problem::Deconvolution { grid, kernel_sd } => deconvolution_operator(*grid, *kernel_sd),
            Problem::CauchyLaplace { grid } => cauchy_laplace_operator(*grid),
            Problem::External { operator_path } => read_operator_csv(operator_path),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    Normal,
    StudentT,
    SkewNormal,
    SkewT,
}

impl NoiseModel {
    pub fn name(self) -> &'static str {
        match self {
            NoiseModel::Normal => "normal",
            NoiseModel::StudentT => "student_t",
            NoiseModel::SkewNormal => "skew_normal",
            NoiseModel::SkewT => "skew_t",
        }
    }

    /// Applies the model's constraints to a sampler configuration.
    pub fn constrain(self, mut cfg: SamplerConfig) -> SamplerConfig {
        let (delta, fixed_gaussian) = match self {
            NoiseModel::Normal => (DeltaMode::Zero, true),
            NoiseModel::StudentT => (DeltaMode::Zero, false),
            NoiseModel::SkewNormal => (DeltaMode::Free, true),
            NoiseModel::SkewT => (DeltaMode::Free, false),
        };
        cfg.delta_mode = delta;
        if fixed_gaussian {
            cfg.nu_mode = NuMode::Fixed(GAUSSIAN_NU);
        }
        cfg
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normal" => Ok(NoiseModel::Normal),
            "student_t" => Ok(NoiseModel::StudentT),
            "skew_normal" => Ok(NoiseModel::SkewNormal),
            "skew_t" => Ok(NoiseModel::SkewT),
            other => Err(Error::Config(format!(
                "unknown noise model '{other}' (expected normal, student_t, skew_normal or skew_t)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrueU {
    Values(Vec<f64>),
    Preset(String),
}

impl TrueU {
    /// Presets: `bump` (Gaussian bump of height 2), `sine`, `step`, `zero`.
    pub fn resolve(&self, d: usize) -> Result<Vec<f64>> {
        match self {
            TrueU::Values(v) if v.len() == d => Ok(v.clone()),
            TrueU::Values(v) => Err(Error::Config(format!(
                "true_u has {} entries but the operator has {d} columns",
                v.len()
            ))),
            TrueU::Preset(name) => {
                let c = (d as f64 - 1.0) / 2.0;
                let f: Box<dyn Fn(usize) -> f64> = match name.as_str() {
                    "bump" => {
                        let width = (d as f64 / 4.0).max(1.0);
                        Box::new(move |j| 2.0 * (-0.5 * ((j as f64 - c) / width).powi(2)).exp())
                    }
                    "sine" => Box::new(move |j| (2.0 * std::f64::consts::PI * j as f64 / d as f64).sin()),
                    "step" => Box::new(move |j| if (j as f64) < c { 0.0 } else { 1.0 }),
                    "zero" => Box::new(|_| 0.0),
                    other => return Err(Error::Config(format!("unknown true_u preset '{other}'"))),
                };
                Ok((0..d).map(f).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub alpha: f64,
    pub nu: f64,
}

impl NoiseSpec {
    pub fn params(&self) -> Result<SkewTParams> {
        SkewTParams::new(self.sigma, self.alpha, self.nu).map_err(|e| Error::Config(format!("synthetic noise: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub true_u: TrueU,
    pub noise: NoiseSpec,
    /// Defaults to the sampler seed plus [`SYNTHETIC_SEED_OFFSET`].
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UPrecision {
    Isotropic { precision: f64 },
    /// `kappa * D^T D + gamma * I`, `D` the second-difference matrix.
    Smoothness { kappa: f64, gamma: f64 },
    Matrix { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    #[serde(default)]
    pub u_mean: Option<Vec<f64>>,
    #[serde(default = "default_u_precision")]
    pub u_precision: UPrecision,
    #[serde(default = "default_delta_sd")]
    pub delta_sd: f64,
    #[serde(default = "default_tau_shape")]
    pub tau_shape: f64,
    #[serde(default = "default_tau_rate")]
    pub tau_rate: f64,
    #[serde(default = "default_nu_rate")]
    pub nu_rate: f64,
}

fn default_u_precision() -> UPrecision {
    UPrecision::Isotropic {
        precision: DEFAULT_U_PRECISION,
    }
}
fn default_delta_sd() -> f64 {
    DEFAULT_DELTA_SD
}
fn default_tau_shape() -> f64 {
    DEFAULT_TAU_SHAPE
}
fn default_tau_rate() -> f64 {
    DEFAULT_TAU_RATE
}
fn default_nu_rate() -> f64 {
    DEFAULT_NU_RATE
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            u_mean: None,
            u_precision: default_u_precision(),
            delta_sd: DEFAULT_DELTA_SD,
            tau_shape: DEFAULT_TAU_SHAPE,
            tau_rate: DEFAULT_TAU_RATE,
            nu_rate: DEFAULT_NU_RATE,
        }
    }
}

impl PriorConfig {
    pub fn build(&self, d: usize) -> Result<PriorSpec> {
        let u_mean = match &self.u_mean {
            Some(m) if m.len() == d => m.clone(),
            Some(m) => {
                return Err(Error::Config(format!(
                    "priors.u_mean has {} entries, operator has {d} columns",
                    m.len()
                )))
            }
            None => vec![0.0; d],
        };
        let precision = match &self.u_precision {
            UPrecision::Isotropic { precision } => DMatrix::identity(d, d) * *precision,
            UPrecision::Smoothness { kappa, gamma } => smoothness_precision(d, *kappa, *gamma),
            UPrecision::Matrix { rows } => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Config(format!("priors.u_precision.rows must be {d}x{d}")));
                }
                DMatrix::from_fn(d, d, |i, j| rows[i][j])
            }
        };
        PriorSpec::new(
            u_mean,
            precision,
            self.delta_sd,
            self.tau_shape,
            self.tau_rate,
            self.nu_rate,
        )
        .map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Defaults to 25% of `iterations`.
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default = "one")]
    pub thin: usize,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_nu_sd")]
    pub nu_proposal_sd: f64,
    #[serde(default = "default_nu_mode")]
    pub nu_mode: NuMode,
}

fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}
fn one() -> usize {
    1
}
fn default_chains() -> usize {
    DEFAULT_CHAINS
}
fn default_nu_sd() -> f64 {
    DEFAULT_NU_PROPOSAL_SD
}
fn default_nu_mode() -> NuMode {
    NuMode::Sampled
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection {
            iterations: DEFAULT_ITERATIONS,
            burn_in: None,
            thin: 1,
            chains: DEFAULT_CHAINS,
            seed: 0,
            nu_proposal_sd: DEFAULT_NU_PROPOSAL_SD,
            nu_mode: NuMode::Sampled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    /// Tile the operator rows cyclically up to this many observations.
    #[serde(default)]
    pub n_obs: Option<usize>,
    #[serde(default)]
    pub data_path: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default = "default_noise_model")]
    pub noise_model: NoiseModel,
    #[serde(default)]
    pub priors: PriorConfig,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub diagnostics: DiagnosticSettings,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_noise_model() -> NoiseModel {
    NoiseModel::SkewT
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// A self-contained demo: 16-cell deconvolution, bump truth, skew-t noise.
    pub fn demo() -> Self {
        RunConfig {
            problem: Problem::Deconvolution {
                grid: 16,
                kernel_sd: 1.0,
            },
            n_obs: Some(200),
            data_path: None,
            synthetic: Some(SyntheticSpec {
                true_u: TrueU::Preset("bump".into()),
                noise: NoiseSpec {
                    sigma: 1.5f64.sqrt(),
                    alpha: 2f64.sqrt(),
                    nu: 4.0,
                },
                seed: None,
            }),
            noise_model: NoiseModel::SkewT,
            priors: PriorConfig::default(),
            sampler: SamplerSection::default(),
            diagnostics: DiagnosticSettings::default(),
            output_dir: default_output_dir(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fills derived defaults and checks cross-field invariants.
    pub fn resolve(mut self) -> Result<Self> {
        match (&self.data_path, &self.synthetic) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("set exactly one of data_path and synthetic, not both".into()))
            }
            (None, None) => return Err(Error::Config("one of data_path or synthetic is required".into())),
            (Some(p), None) if !p.exists() => {
                return Err(Error::Config(format!("data file {} does not exist", p.display())))
            }
            _ => {}
        }
        if let Problem::External { operator_path } = &self.problem {
            if !operator_path.exists() {
                return Err(Error::Config(format!(
                    "operator file {} does not exist",
                    operator_path.display()
                )));
            }
        }
        if self.n_obs == Some(0) {
            return Err(Error::Config("n_obs must be >= 1".into()));
        }
        if self.sampler.burn_in.is_none() {
            self.sampler.burn_in = Some(self.sampler.iterations / 4);
        }
        let seed = self.sampler.seed;
        if let Some(syn) = &mut self.synthetic {
            syn.noise.params()?;
            syn.seed.get_or_insert(seed.wrapping_add(SYNTHETIC_SEED_OFFSET));
        }
        self.sampler_config().validate()?;
        Ok(self)
    }

    /// Sampler configuration with the noise model's constraints applied.
    pub fn sampler_config(&self) -> SamplerConfig {
        let s = &self.sampler;
        let cfg = SamplerConfig {
            iterations: s.iterations,
            burn_in: s.burn_in.unwrap_or(s.iterations / 4),
            thin: s.thin,
            chains: s.chains,
            seed: s.seed,
            nu_proposal_sd: s.nu_proposal_sd,
            nu_mode: s.nu_mode,
            delta_mode: DeltaMode::Free,
        };
        self.noise_model.constrain(cfg)
    }

    pub fn operator(&self) -> Result<LinearForwardModel> {
        let op = self.problem.build()?;
        match self.n_obs {
            Some(n) => op.tile_rows(n),
            None => Ok(op),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::from_json_str(
            r#"{"problem": {"kind": "deconvolution", "grid": 8, "kernel_sd": 1.0},
                "synthetic": {"true_u": "bump", "noise": {"sigma": 1.0, "alpha": 2.0, "nu": 5.0}}}"#,
        )
        .unwrap()
        .resolve()
        .unwrap();
        assert_eq!(cfg.sampler.iterations, 20_000);
        assert_eq!(cfg.sampler.burn_in, Some(5_000));
        assert_eq!(cfg.sampler.chains, 4);
        assert_eq!(cfg.priors.nu_rate, 0.5);
        assert_eq!(cfg.synthetic.as_ref().unwrap().seed, Some(SYNTHETIC_SEED_OFFSET));
        assert_eq!(cfg.noise_model, NoiseModel::SkewT);
        let again = RunConfig::from_json_str(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn exactly_one_data_source() {
        let mut cfg = RunConfig::demo();
        cfg.synthetic = None;
        assert!(matches!(cfg.clone().resolve(), Err(Error::Config(_))));
        cfg.data_path = Some("/definitely/missing.csv".into());
        assert!(matches!(cfg.clone().resolve(), Err(Error::Config(_))));
        let mut both = RunConfig::demo();
        both.data_path = Some("x.csv".into());
        assert!(matches!(both.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn zero_sigma_rejected() {
        let mut cfg = RunConfig::demo();
        cfg.synthetic.as_mut().unwrap().noise.sigma = 0.0;
        assert!(matches!(cfg.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_fields_rejected() {
        let err = RunConfig::from_json_str(
            r#"{"problem": {"kind": "cauchy_laplace", "grid": 8}, "sampler": {"iters": 5}}"#,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn noise_model_constraints() {
        let base = SamplerConfig::default();
        let n = NoiseModel::Normal.constrain(base.clone());
        assert_eq!((n.delta_mode, n.nu_mode), (DeltaMode::Zero, NuMode::Fixed(GAUSSIAN_NU)));
        let t = NoiseModel::StudentT.constrain(base.clone());
        assert_eq!((t.delta_mode, t.nu_mode), (DeltaMode::Zero, NuMode::Sampled));
        let sn = NoiseModel::SkewNormal.constrain(base.clone());
        assert_eq!((sn.delta_mode, sn.nu_mode), (DeltaMode::Free, NuMode::Fixed(GAUSSIAN_NU)));
        let st = NoiseModel::SkewT.constrain(base);
        assert_eq!((st.delta_mode, st.nu_mode), (DeltaMode::Free, NuMode::Sampled));
    }

    #[test]
    fn presets_and_explicit_truth() {
        assert_eq!(TrueU::Preset("zero".into()).resolve(4).unwrap(), vec![0.0; 4]);
        let bump = TrueU::Preset("bump".into()).resolve(16).unwrap();
        assert!(bump.iter().all(|v| *v > 0.0 && *v <= 2.0));
        assert!(TrueU::Values(vec![1.0, 2.0]).resolve(3).is_err());
        assert!(TrueU::Preset("nope".into()).resolve(3).is_err());
    }

    #[test]
    fn nu_mode_parsing() {
        assert_eq!("sampled".parse::<NuMode>().unwrap(), NuMode::Sampled);
        assert_eq!("fixed:4.5".parse::<NuMode>().unwrap(), NuMode::Fixed(4.5));
        assert!("fixed:".parse::<NuMode>().is_err());
        assert!("other".parse::<NuMode>().is_err());
        let mut cfg = RunConfig::demo();
        cfg.sampler.nu_mode = NuMode::Fixed(1.5);
        assert!(matches!(cfg.resolve(), Err(Error::Config(_))));
    }
}
