mod commands;
mod config;
mod error;
mod manifest;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::{RunConfig, ScenarioPreset};
use crate::error::CliError;

/// Jam-aware WiFi stack: data generation, training, authentication,
/// MCS table derivation and network simulation.
#[derive(Debug, Parser)]
#[command(name = "deepwifi", version)]
struct Cli {
    /// TOML file overriding the preset, section by section.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output root. Defaults to $DEEPWIFI_OUT, then ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Replace every seed in the configuration with ones derived from this.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Start from the large dataset, autoencoder and 100 s simulation presets.
    #[arg(long, global = true)]
    full_scale: bool,

    /// Base network scenario for simulate and sweep.
    #[arg(long, global = true, value_enum, default_value_t = ScenarioPreset::Default)]
    scenario: ScenarioPreset,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the labeled I/W/J frame dataset.
    GenData,
    /// Train the autoencoder and classifier on a generated dataset.
    Train {
        /// Dataset file. Defaults to <out>/data/dataset.dwds.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run the RF fingerprint authentication scenario.
    AuthEval,
    /// Derive the SINR-to-MCS threshold table by simulation.
    McsTable,
    /// Run one network simulation.
    Simulate {
        /// Directory with trained models. Defaults to <out>/models.
        #[arg(long)]
        models: Option<PathBuf>,
        /// Threshold CSV from mcs-table. Defaults to the bundled table.
        #[arg(long)]
        mcs_table: Option<PathBuf>,
    },
    /// Run a parameter sweep over p_J or SINR.
    Sweep {
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        mcs_table: Option<PathBuf>,
    },
    /// Fast correctness checks; exits with 3 if any fails.
    SelfTest,
    /// Print the resolved configuration.
    ShowConfig,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve(cli.full_scale, cli.scenario, cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.reseed(seed);
    }
    let out = cli
        .out
        .or_else(|| std::env::var_os("DEEPWIFI_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context { cfg, out };
    match cli.command {
        Command::GenData => commands::gen_data(&ctx),
        Command::Train { data } => commands::train(&ctx, data),
        Command::AuthEval => commands::auth_eval(&ctx),
        Command::McsTable => commands::mcs_table(&ctx),
        Command::Simulate { models, mcs_table } => commands::simulate(&ctx, models, mcs_table),
        Command::Sweep { models, mcs_table } => commands::sweep(&ctx, models, mcs_table),
        Command::SelfTest => selftest::self_test(),
        Command::ShowConfig => {
            print!("{}", ctx.cfg.to_toml()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own usage errors would exit with 2, which is reserved
            // for numeric failures here.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
