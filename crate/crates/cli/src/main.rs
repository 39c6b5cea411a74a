//! `driftwalk`: experiments on a continuous-time nearest-neighbour random
//! walk in a random potential with decaying drift.
//!
//! All subcommands read one TOML config (every omitted field gets a
//! documented default that is echoed into the output provenance), write one
//! CSV table plus one JSON summary, and are deterministic: the pair
//! (config, root seed) fixes every output byte at any thread count.
//!
//! Exit codes: 0 success, 2 configuration error, 3 budget refusal,
//! 4 runtime error.

mod commands;
mod config;
mod error;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ResolvedConfig;
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "driftwalk",
    version,
    about = "Random-walk-in-random-potential experiments: environment sampling, ensemble \
             simulation, hitting times, path draw statistics, and validation studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file; omitted fields use documented defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output prefix; `<out>.csv` and `<out>_summary.json` are written.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker thread count (default: one per CPU).  Outputs do not depend
    /// on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Event budget; overrides the config value.  Runs whose pre-run
    /// estimate exceeds it refuse to start.
    #[arg(long = "budget-events", global = true)]
    budget_events: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the configured environment and write its record as JSON.
    GenEnv,
    /// Run a replica ensemble on one environment; positions per horizon.
    Simulate,
    /// First-hit times of the configured target sites.
    Hitting,
    /// Draw statistics and path events of sampled potential paths.
    Drawstats,
    /// Draw-up law of drifted Brownian motion: closed form vs Monte Carlo.
    Bmlaw,
    /// Run the experiment kind named in the config.
    Experiment,
}

fn load_config(cli: &Cli) -> CliResult<ResolvedConfig> {
    let mut cfg = match &cli.config {
        Some(path) => config::parse_config(path)?,
        None => config::parse_config_text("")?,
    };
    if let Some(seed) = cli.seed {
        cfg.root_seed = seed;
        cfg.overrides.push(format!("root_seed = {seed} (--seed)"));
    }
    if let Some(budget) = cli.budget_events {
        cfg.budget_events = budget;
        cfg.overrides
            .push(format!("run.budget_events = {budget} (--budget-events)"));
    }
    if let Some(out) = &cli.out {
        cfg.output_prefix = out.to_string_lossy().into_owned();
        cfg.overrides
            .push(format!("output_prefix = {:?} (--out)", cfg.output_prefix));
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Run(format!("cannot configure {threads} threads: {e}")))?;
    }
    let mut cfg = load_config(cli)?;
    let prefix = PathBuf::from(cfg.output_prefix.clone());
    match cli.command {
        Command::GenEnv => commands::gen_env(&mut cfg, &prefix),
        Command::Simulate => commands::simulate(&mut cfg, &prefix),
        Command::Hitting => commands::hitting(&mut cfg, &prefix),
        Command::Drawstats => commands::drawstats(&mut cfg, &prefix),
        Command::Bmlaw => experiments::drawlaw::run(&mut cfg, &prefix),
        Command::Experiment => experiments::run_experiment(&mut cfg, &prefix),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
