//! Experiment harness around `fosp-core`: declarative TOML configs, parameter
//! sweeps run in parallel, and deterministic CSV/JSON/plot-data reports.
//!
//! Exit codes: 0 success, 1 assertion failure, 2 config error, 3 budget or
//! numerical error.

pub mod config;
pub mod report;
pub mod runner;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use runner::{execute, Command, Outcome, RunOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Budget(_) | CliError::Numerical(_) => 3,
        }
    }
}

impl From<fosp_core::Error> for CliError {
    fn from(e: fosp_core::Error) -> Self {
        use fosp_core::Error as E;
        match e {
            E::Budget { .. } => CliError::Budget(e.to_string()),
            E::NonConverged { .. } | E::Numerical(_) => CliError::Numerical(e.to_string()),
            E::DimensionMismatch { .. }
            | E::InvalidDomain(_)
            | E::InvalidParameter(_)
            | E::Unsupported(_)
            | E::Regime(_)
            | E::Validity(_) => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fosp", version, about = "Run, certify and benchmark small-domain min-max experiments")]
pub struct Cli {
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "FOSP_OUT_DIR", default_value = "fosp-out")]
    pub out_dir: PathBuf,
    /// Worker threads for the sweep.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Fills the wall_ms column (output is then no longer byte-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Runs the configured algorithm at every grid point and verifies the output.
    Run { config: PathBuf },
    /// Evaluates the lower-bound constructions at every grid point.
    Certify { config: PathBuf },
    /// Evaluates the diameter condition at every grid point.
    CheckDiameter { config: PathBuf },
    /// Compares the Krylov oracle with the dense trust-region solve.
    KrylovBench { config: PathBuf },
}

/// Runs a parsed command line and returns the process exit code.
pub fn run_cli(cli: Cli) -> u8 {
    let (cmd, path) = match &cli.command {
        Sub::Run { config } => (Command::Run, config),
        Sub::Certify { config } => (Command::Certify, config),
        Sub::CheckDiameter { config } => (Command::CheckDiameter, config),
        Sub::KrylovBench { config } => (Command::KrylovBench, config),
    };
    let opts = RunOptions { seed: cli.seed, jobs: cli.jobs, timing: cli.timing };
    match run_command(cmd, path, &cli.out_dir, &opts) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fosp: {e}");
            e.exit_code()
        }
    }
}

/// Loads, executes and reports one config; assertion failures come back as
/// [`CliError::Assertion`].
pub fn run_command(cmd: Command, path: &std::path::Path, out_dir: &std::path::Path, opts: &RunOptions) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(path)?;
    let out = execute(cmd, &cfg, opts)?;
    let written = report::write_outputs(&out, out_dir)?;
    let certified = out.records.iter().filter(|r| r.row.certified).count();
    println!(
        "{} {}: {} rows ({} certified), {} failed, config {} -> {}",
        cmd.name(),
        out.name,
        out.records.len(),
        certified,
        out.failures.len(),
        out.config_hash,
        written.csv.display()
    );
    if let Some(f) = out.failures.into_iter().next() {
        eprintln!("fosp: run {} failed", f.run_id);
        return Err(f.error);
    }
    let failed = report::check_assertions(&cfg.assertions, &out.records);
    for f in &failed {
        eprintln!("fosp: assertion {f}");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Assertion(failed.join("; ")))
    }
}
