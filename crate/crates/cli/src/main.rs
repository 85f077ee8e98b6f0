//! `fluor`: run simulations and analyses from JSON configurations.
//!
//! Each run writes its resolved configuration (`config.json`), the command's
//! artifacts and a `run.json` status record into the output directory.
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use config::RunConfig;
use error::CliError;
use output::Output;

#[derive(Debug, Parser)]
#[command(name = "fluor", version, about = "Quantum trajectories of a heterodyne-monitored fluorescing qubit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the base seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "FLUOR_THREADS")]
    threads: Option<usize>,
    /// Only report warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Parse and validate the configuration, then exit without running.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Generate a trajectory ensemble (CSV + manifest).
    Simulate,
    /// Ensemble averages, optionally post-selected with the empirical most probable path.
    Average,
    /// Most-likely path between boundary conditions.
    Mlp,
    /// Ideal-detection most-likely paths and phase portraits in (θ, p_θ).
    MlpIdeal,
    /// Analytic and Monte Carlo covariance grids.
    Correlate,
    /// General stochastic master equation trajectories.
    Sme,
    /// Observable reconstruction from weak-measurement outcomes.
    CvReconstruct,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Average => "average",
            Command::Mlp => "mlp",
            Command::MlpIdeal => "mlp-ideal",
            Command::Correlate => "correlate",
            Command::Sme => "sme",
            Command::CvReconstruct => "cv-reconstruct",
        }
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    schema_version: u32,
    command: &'a str,
    status: &'a str,
    error: Option<String>,
    outputs: &'a [String],
    summary: Value,
}

fn run<C: RunConfig>(cli: &Cli, f: fn(&C, &mut Output) -> Result<Value, CliError>) -> Result<Value, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut cfg: C = config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if cli.check {
        return Ok(serde_json::to_value(&cfg)?);
    }
    let mut out = Output::new(&cli.out)?;
    out.json("config.json", &cfg)?;
    let result = f(&cfg, &mut out);
    let (status, error, summary) = match &result {
        Ok(v) => ("ok", None, v.clone()),
        Err(e) => ("failed", Some(e.to_string()), Value::Null),
    };
    let outputs = out.written().to_vec();
    let record = RunRecord {
        schema_version: config::SCHEMA_VERSION,
        command: cli.command.name(),
        status,
        error,
        outputs: &outputs,
        summary,
    };
    out.json("run.json", &record)?;
    result
}

fn dispatch(cli: &Cli) -> Result<Value, CliError> {
    match cli.command {
        Command::Simulate => run(cli, commands::simulate),
        Command::Average => run(cli, commands::average),
        Command::Mlp => run(cli, commands::mlp),
        Command::MlpIdeal => run(cli, commands::mlp_ideal),
        Command::Correlate => run(cli, commands::correlate),
        Command::Sme => run(cli, commands::sme),
        Command::CvReconstruct => run(cli, commands::cv_reconstruct),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match dispatch(&cli) {
        Ok(summary) => {
            if !cli.quiet {
                println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
