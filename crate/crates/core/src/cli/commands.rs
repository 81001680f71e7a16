use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::config::{NoiseModel, RunConfig};
use crate::diagnostics::{combine_chains, diagnose, ess, geweke, waic, DiagnosticSettings, ParameterDiagnostics};
use crate::error::{Error, Result};
use crate::io::{
    read_data_csv, write_data_csv, write_draws_csv, write_rows, CompareRow, DiagnosticsRow, SensitivityRow,
    SummaryRow, TruthRow,
};
use crate::model::{ObservedData, PriorSpec, NU_LOWER};
use crate::sampler::{param_names, run_multi, ChainOutput, DeltaMode, NuMode, SamplerConfig};
use crate::skew_t::{sample_skew_t, to_latent, SkewTParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Data(_) | Error::Io { .. } | Error::Csv { .. } | Error::Dimension { .. } | Error::Structural(_) => {
            EXIT_DATA
        }
        Error::Domain(_)
        | Error::DegenerateVariance(_)
        | Error::Decomposition(_)
        | Error::Convergence(_)
        | Error::Invariant { .. } => EXIT_NUMERICAL,
    }
}

/// Command-line values that replace the corresponding config entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub iterations: Option<usize>,
    pub chains: Option<usize>,
    pub nu_mode: Option<NuMode>,
}

/// Overriding `iterations` also resets `burn_in` to its 25% default.
pub fn apply_overrides(mut config: RunConfig, o: &Overrides) -> RunConfig {
    if let Some(seed) = o.seed {
        config.sampler.seed = seed;
    }
    if let Some(dir) = &o.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(it) = o.iterations {
        config.sampler.iterations = it;
        config.sampler.burn_in = None;
    }
    if let Some(c) = o.chains {
        config.sampler.chains = c;
    }
    if let Some(m) = o.nu_mode {
        config.sampler.nu_mode = m;
    }
    config
}

pub fn failure_state_path(output_dir: &Path) -> PathBuf {
    output_dir.join("failure_state.json")
}

#[derive(Debug, Clone)]
pub struct GenerateOutcome {
    pub config: RunConfig,
    pub y: Vec<f64>,
    pub true_u: Vec<f64>,
    pub data_path: PathBuf,
    pub truth_path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub chains: Vec<ChainOutput>,
    pub summary: Vec<SummaryRow>,
    pub diagnostics: Vec<DiagnosticsRow>,
    /// Known only for synthetic data.
    pub true_u: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub config: RunConfig,
    /// Sorted by rank.
    pub rows: Vec<CompareRow>,
}

#[derive(Debug, Clone)]
pub struct SensitivityOutcome {
    pub config: RunConfig,
    /// Fixed-nu runs in listed order, then the sampled run.
    pub rows: Vec<SensitivityRow>,
}

struct Truth {
    u: Vec<f64>,
    params: SkewTParams,
}

struct Prepared {
    config: RunConfig,
    data: ObservedData,
    spec: PriorSpec,
    truth: Option<Truth>,
}

fn prepare(config: RunConfig) -> Result<Prepared> {
    let config = config.resolve()?;
    let op = config.operator()?;
    let spec = config.priors.build(op.cols())?;
    let (y, truth) = match (&config.synthetic, &config.data_path) {
        (Some(syn), _) => {
            let u = syn.true_u.resolve(op.cols())?;
            let params = syn.noise.params()?;
            let signal = op.apply(&u)?;
            let seed = syn.seed.expect("resolved config carries the synthetic seed");
            let noise = sample_skew_t(signal.len(), &params, seed);
            let y = signal.iter().zip(&noise).map(|(s, e)| s + e).collect();
            (y, Some(Truth { u, params }))
        }
        (None, Some(path)) => (read_data_csv(path)?, None),
        (None, None) => unreachable!("resolve requires a data source"),
    };
    if y.len() != op.rows() {
        return Err(Error::Data(format!(
            "data has {} observations but the operator has {} rows",
            y.len(),
            op.rows()
        )));
    }
    let data = ObservedData::new(y, op)?;
    Ok(Prepared {
        config,
        data,
        spec,
        truth,
    })
}

fn create_output_dir(config: &RunConfig) -> Result<()> {
    fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))
}

fn write_resolved_config(config: &RunConfig) -> Result<PathBuf> {
    let path = config.output_dir.join("resolved_config.json");
    fs::write(&path, config.to_json()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Runs all chains; an invariant failure dumps the offending state first.
fn run_chains(p: &Prepared, sampler: &SamplerConfig) -> Result<Vec<ChainOutput>> {
    let result = run_multi(&p.data, &p.spec, sampler);
    if let Err(Error::Invariant { state, .. }) = &result {
        let path = failure_state_path(&p.config.output_dir);
        let json = serde_json::to_string_pretty(state.as_ref()).expect("state serializes");
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    }
    result
}

/// Writes `data.csv`, `truth.csv` and `resolved_config.json`.
pub fn cmd_generate(config: RunConfig) -> Result<GenerateOutcome> {
    if config.synthetic.is_none() {
        return Err(Error::Config("generate needs a synthetic block".into()));
    }
    let p = prepare(config)?;
    let truth = p.truth.expect("synthetic config has a truth");
    create_output_dir(&p.config)?;
    let data_path = p.config.output_dir.join("data.csv");
    let truth_path = p.config.output_dir.join("truth.csv");
    write_data_csv(&data_path, &p.data.y)?;
    write_rows(&truth_path, &truth_rows(&truth))?;
    write_resolved_config(&p.config)?;
    Ok(GenerateOutcome {
        config: p.config,
        y: p.data.y,
        true_u: truth.u,
        data_path,
        truth_path,
    })
}

fn truth_rows(t: &Truth) -> Vec<TruthRow> {
    let latent = to_latent(&t.params);
    let mut rows: Vec<TruthRow> = t
        .u
        .iter()
        .enumerate()
        .map(|(j, v)| TruthRow {
            parameter: format!("u_{}", j + 1),
            value: *v,
        })
        .collect();
    for (name, value) in [
        ("Delta", latent.delta),
        ("tau", latent.tau),
        ("nu", t.params.nu.get()),
        ("sigma", t.params.sigma),
        ("alpha", t.params.alpha),
    ] {
        rows.push(TruthRow {
            parameter: name.into(),
            value,
        });
    }
    rows
}

/// Writes `chain_K.csv` per chain (K from 1), `summary.csv`,
/// `diagnostics.csv` and `resolved_config.json`.
pub fn cmd_run(config: RunConfig) -> Result<RunOutcome> {
    let p = prepare(config)?;
    let sampler = p.config.sampler_config();
    create_output_dir(&p.config)?;
    write_resolved_config(&p.config)?;
    let chains = run_chains(&p, &sampler)?;
    for (k, c) in chains.iter().enumerate() {
        write_draws_csv(&p.config.output_dir.join(format!("chain_{}.csv", k + 1)), c)?;
    }
    let summary = summarize(&chains);
    write_rows(&p.config.output_dir.join("summary.csv"), &summary)?;
    let diagnostics = diagnostics_rows(&chains, &p.config.diagnostics);
    write_rows(&p.config.output_dir.join("diagnostics.csv"), &diagnostics)?;
    Ok(RunOutcome {
        config: p.config,
        chains,
        summary,
        diagnostics,
        true_u: p.truth.map(|t| t.u),
    })
}

fn pooled_column(chains: &[ChainOutput], j: usize) -> Vec<f64> {
    chains.iter().flat_map(|c| c.column(j)).collect()
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Posterior summary over the pooled draws of every chain.
pub fn summarize(chains: &[ChainOutput]) -> Vec<SummaryRow> {
    let Some(first) = chains.first() else {
        return Vec::new();
    };
    param_names(first.dim())
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let mut xs = pooled_column(chains, j);
            let (mean, sd) = mean_sd(&xs);
            xs.sort_by(f64::total_cmp);
            SummaryRow {
                parameter: name,
                mean,
                sd,
                q2_5: quantile(&xs, 0.025),
                q50: quantile(&xs, 0.5),
                q97_5: quantile(&xs, 0.975),
            }
        })
        .collect()
}

/// Diagnostics that cannot be computed (chain too short) are NaN with
/// failing flags.
fn diagnose_lenient(name: &str, chain: &[f64], settings: &DiagnosticSettings) -> ParameterDiagnostics {
    diagnose(name, chain, settings).unwrap_or_else(|_| ParameterDiagnostics {
        name: name.to_string(),
        ess: ess(chain).unwrap_or(f64::NAN),
        geweke_z: geweke(chain, settings.geweke_first, settings.geweke_last).unwrap_or(f64::NAN),
        hw_stationary: false,
        hw_p: f64::NAN,
        hw_halfwidth_ok: false,
        autocorrelations: Vec::new(),
    })
}

/// One row per non-constant parameter plus `u_norm2`, merged over chains.
fn diagnostics_rows(chains: &[ChainOutput], settings: &DiagnosticSettings) -> Vec<DiagnosticsRow> {
    let Some(first) = chains.first() else {
        return Vec::new();
    };
    let mut series: Vec<(String, Vec<Vec<f64>>)> = param_names(first.dim())
        .into_iter()
        .enumerate()
        .map(|(j, name)| (name, chains.iter().map(|c| c.column(j)).collect()))
        .collect();
    series.push(("u_norm2".into(), chains.iter().map(ChainOutput::u_norm2).collect()));
    series
        .into_iter()
        .filter(|(_, per_chain)| {
            let x0 = per_chain[0].first().copied();
            per_chain.iter().flatten().any(|v| Some(*v) != x0)
        })
        .filter_map(|(name, per_chain)| {
            let diags: Vec<_> = per_chain
                .iter()
                .map(|xs| diagnose_lenient(&name, xs, settings))
                .collect();
            combine_chains(&diags).map(|p| DiagnosticsRow::from(&p))
        })
        .collect()
}

fn stack_loglik(chains: &[ChainOutput]) -> DMatrix<f64> {
    let n = chains[0].pointwise_loglik.ncols();
    let rows: usize = chains.iter().map(|c| c.pointwise_loglik.nrows()).sum();
    let mut out = DMatrix::zeros(rows, n);
    let mut r0 = 0;
    for c in chains {
        let k = c.pointwise_loglik.nrows();
        out.rows_mut(r0, k).copy_from(&c.pointwise_loglik);
        r0 += k;
    }
    out
}

/// Fits every listed model to the same data with the same seeds and ranks
/// them by WAIC over the pooled draws. Ties keep the listed order.
pub fn cmd_compare(config: RunConfig, models: &[NoiseModel]) -> Result<CompareOutcome> {
    if models.len() < 2 {
        return Err(Error::Config(format!("compare needs at least 2 models, got {}", models.len())));
    }
    let p = prepare(config)?;
    create_output_dir(&p.config)?;
    write_resolved_config(&p.config)?;
    let mut rows = Vec::with_capacity(models.len());
    for m in models {
        let sampler = m.constrain(p.config.sampler_config());
        let chains = run_chains(&p, &sampler)?;
        let w = waic(&stack_loglik(&chains))?;
        rows.push(CompareRow {
            model: m.name().into(),
            lppd: w.lppd,
            p_waic: w.p_waic,
            waic: w.waic,
            rank: 0,
        });
    }
    rows.sort_by(|a, b| a.waic.total_cmp(&b.waic));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    write_rows(&p.config.output_dir.join("compare.csv"), &rows)?;
    Ok(CompareOutcome { config: p.config, rows })
}

/// `||u_hat - u_true||` and its Monte Carlo standard error. The error is
/// linearised around the posterior mean, so the standard error is that of
/// the mean of the projection `g . u_t` with `g` the unit error direction.
fn reconstruction_error(chains: &[ChainOutput], true_u: &[f64]) -> (f64, f64) {
    let d = true_u.len();
    let u_hat: Vec<f64> = (0..d).map(|j| mean_sd(&pooled_column(chains, j)).0).collect();
    let diff: Vec<f64> = u_hat.iter().zip(true_u).map(|(a, b)| a - b).collect();
    let err = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    if err == 0.0 {
        return (0.0, 0.0);
    }
    let mut all = Vec::new();
    let mut total_ess = 0.0;
    for c in chains {
        let proj: Vec<f64> = c
            .draws
            .row_iter()
            .map(|r| (0..d).map(|j| r[j] * diff[j] / err).sum())
            .collect();
        total_ess += ess(&proj).unwrap_or(proj.len() as f64);
        all.extend(proj);
    }
    let (_, sd) = mean_sd(&all);
    (err, sd / total_ess.sqrt())
}

/// One fixed-nu run per listed value plus one sampled-nu run, all with the
/// configured seeds and noise-model skewness setting.
pub fn cmd_sensitivity(config: RunConfig, nu_values: &[f64]) -> Result<SensitivityOutcome> {
    if nu_values.is_empty() {
        return Err(Error::Config("sensitivity needs at least one nu value".into()));
    }
    if let Some(bad) = nu_values.iter().find(|v| !(v.is_finite() && **v > NU_LOWER)) {
        return Err(Error::Config(format!(
            "nu value {bad} lies outside the prior support: nu must be strictly larger than {NU_LOWER}"
        )));
    }
    let p = prepare(config)?;
    create_output_dir(&p.config)?;
    write_resolved_config(&p.config)?;
    let base = p.config.sampler_config();
    let delta_fixed = base.delta_mode == DeltaMode::Zero;
    let modes = nu_values
        .iter()
        .map(|v| NuMode::Fixed(*v))
        .chain(std::iter::once(NuMode::Sampled));
    let mut rows = Vec::new();
    for mode in modes {
        let sampler = SamplerConfig {
            nu_mode: mode,
            ..base.clone()
        };
        let chains = run_chains(&p, &sampler)?;
        let d = p.data.dim();
        let (delta_mean, delta_sd) = mean_sd(&pooled_column(&chains, d));
        let (tau_mean, tau_sd) = mean_sd(&pooled_column(&chains, d + 1));
        let (nu_mean, _) = mean_sd(&pooled_column(&chains, d + 2));
        let recon = p.truth.as_ref().map(|t| reconstruction_error(&chains, &t.u));
        rows.push(SensitivityRow {
            nu_mode: mode.to_string(),
            nu_mean,
            delta_mean: if delta_fixed { 0.0 } else { delta_mean },
            delta_sd: if delta_fixed { 0.0 } else { delta_sd },
            tau_mean,
            tau_sd,
            recon_error: recon.map(|r| r.0),
            recon_error_se: recon.map(|r| r.1),
        });
    }
    write_rows(&p.config.output_dir.join("sensitivity.csv"), &rows)?;
    Ok(SensitivityOutcome { config: p.config, rows })
}
