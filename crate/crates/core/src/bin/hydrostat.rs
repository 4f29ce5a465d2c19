use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hydrostat::config::RunConfig;
use hydrostat::runner::{self, RunOptions};
use hydrostat::{Error, Result};

/// Primitive-equations simulator and diagnostics.
#[derive(Parser, Debug)]
#[command(name = "hydrostat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration (built-in defaults when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Continue a run from a snapshot written by an earlier run.
    #[arg(long, global = true, value_name = "SNAPSHOT")]
    resume: Option<PathBuf>,

    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single integration with diagnostics trace and snapshots.
    Run,
    /// Identical runs over the configured epsilon list.
    SweepEpsilon,
    /// Perturbed runs against the continuous-dependence envelope.
    Dependence,
    /// Spectral solver against the finite-difference oracle.
    CrossValidate,
    /// Spatial and time-step convergence on the manufactured solution.
    Convergence,
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if cli.resume.is_some() && !matches!(cli.command, Command::Run) {
        return Err(Error::Config("--resume only applies to `run`".into()));
    }
    let opts = RunOptions {
        out_dir,
        resume: cli.resume.clone(),
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Run => runner::run(&cfg, &opts).map(drop),
        Command::SweepEpsilon => runner::epsilon_sweep(&cfg, &opts).map(drop),
        Command::Dependence => runner::dependence_study(&cfg, &opts).map(drop),
        Command::CrossValidate => runner::cross_validate_study(&cfg, &opts).map(drop),
        Command::Convergence => runner::convergence(&cfg, &opts).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("hydrostat: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
