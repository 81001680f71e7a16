use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skewt_inverse::cli::{
    apply_overrides, cmd_compare, cmd_generate, cmd_run, cmd_sensitivity, exit_code, failure_state_path, NoiseModel,
    Overrides, RunConfig,
};
use skewt_inverse::{Error, NuMode, Result};

#[derive(Parser)]
#[command(version, about = "Bayesian linear inverse problems with skew-t noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw synthetic data and write data.csv, truth.csv.
    Generate(Common),
    /// Sample the posterior and write chains, summary and diagnostics.
    Run(Common),
    /// Rank noise models by WAIC.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated list, e.g. normal,skew_t.
        #[arg(long, value_delimiter = ',', default_value = "normal,student_t,skew_normal,skew_t")]
        models: Vec<NoiseModel>,
    },
    /// Fixed-nu runs for each value plus one sampled-nu run.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "3,5,10,30")]
        nu_values: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; the built-in demo problem when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    /// `sampled` or `fixed:VALUE`.
    #[arg(long)]
    nu_mode: Option<NuMode>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::demo(),
        };
        let overrides = Overrides {
            seed: self.seed,
            output_dir: self.output_dir.clone(),
            iterations: self.iterations,
            chains: self.chains,
            nu_mode: self.nu_mode,
        };
        Ok(apply_overrides(base, &overrides))
    }
}

fn execute(command: Command, output_dir: &mut PathBuf) -> Result<String> {
    let mut load = |c: &Common| {
        let cfg = c.load()?;
        output_dir.clone_from(&cfg.output_dir);
        Ok::<_, Error>(cfg)
    };
    match command {
        Command::Generate(c) => {
            let out = cmd_generate(load(&c)?)?;
            Ok(format!(
                "wrote {} and {}",
                out.data_path.display(),
                out.truth_path.display()
            ))
        }
        Command::Run(c) => {
            let out = cmd_run(load(&c)?)?;
            Ok(format!(
                "wrote {} chains to {}",
                out.chains.len(),
                out.config.output_dir.display()
            ))
        }
        Command::Compare { common, models } => {
            let out = cmd_compare(load(&common)?, &models)?;
            let mut msg = String::from("rank model waic");
            for r in &out.rows {
                msg.push_str(&format!("\n{} {} {:.3}", r.rank, r.model, r.waic));
            }
            Ok(msg)
        }
        Command::Sensitivity { common, nu_values } => {
            let out = cmd_sensitivity(load(&common)?, &nu_values)?;
            Ok(format!(
                "wrote {} rows to {}",
                out.rows.len(),
                out.config.output_dir.join("sensitivity.csv").display()
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut output_dir = PathBuf::from(".");
    match execute(cli.command, &mut output_dir) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Invariant { .. } = e {
                eprintln!("state dump: {}", failure_state_path(&output_dir).display());
            }
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
