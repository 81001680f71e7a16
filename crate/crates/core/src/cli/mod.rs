//! Configuration, subcommands and exit-code mapping behind the binary.

mod commands;
mod config;

pub use commands::{
    apply_overrides, cmd_compare, cmd_generate, cmd_run, cmd_sensitivity, exit_code, failure_state_path,
    summarize, CompareOutcome, GenerateOutcome, Overrides, RunOutcome, SensitivityOutcome, EXIT_CONFIG, EXIT_DATA,
    EXIT_NUMERICAL, EXIT_OK,
};
pub use config::{
    NoiseModel, NoiseSpec, PriorConfig, Problem, RunConfig, SamplerSection, SyntheticSpec, TrueU, UPrecision,
    SYNTHETIC_SEED_OFFSET,
};
