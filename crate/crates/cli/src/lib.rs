//! Batch driver for the numerical experiments: configuration, subcommand
//! dispatch, CSV output and the self-test.

pub mod commands;
pub mod config;
pub mod criteria;
pub mod fixtures;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use config::ExperimentConfig;
use output::Table;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] shefk_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("selftest failed")]
    SelftestFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_precondition() => 3,
            CliError::Core(_) | CliError::Io(_) => 4,
            CliError::SelftestFailed => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    Fbm,
    Field,
    Covariance,
    Moments,
    Lyapunov,
    Bounds,
    Lowerbound,
    Selftest,
}

#[derive(Debug, Parser)]
#[command(
    name = "shefk",
    version,
    about = "Feynman–Kac moment experiments for the heat equation with fractional noise"
)]
struct Args {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// Flat TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value`, applied after the file, in order.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Runs one subcommand; the table and whether a selftest passed.
pub fn execute(sub: Subcommand, cfg: &ExperimentConfig) -> Result<(Table, bool), CliError> {
    let table = match sub {
        Subcommand::Fbm => commands::fbm(cfg)?,
        Subcommand::Field => commands::field(cfg)?,
        Subcommand::Covariance => commands::covariance(cfg)?,
        Subcommand::Moments => commands::moments(cfg)?,
        Subcommand::Lyapunov => commands::lyapunov(cfg)?,
        Subcommand::Bounds => commands::bounds(cfg)?,
        Subcommand::Lowerbound => commands::lowerbound(cfg)?,
        Subcommand::Selftest => return commands::selftest(cfg),
    };
    Ok((table, true))
}

fn run_args(args: Args) -> Result<(), CliError> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = args.overrides.clone();
    overrides.extend(args.seed.map(|s| format!("seed={s}")));
    overrides.extend(args.workers.map(|w| format!("workers={w}")));
    let cfg = ExperimentConfig::load(&text, &overrides)?;
    let (table, ok) = execute(args.subcommand, &cfg)?;
    match args.out.or(cfg.out.as_ref().map(PathBuf::from)) {
        Some(p) => table.write(std::fs::File::create(p)?)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(&mut lock)?;
            lock.flush()?;
        }
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::SelftestFailed)
    }
}

/// Parses `args` (program name first) and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_args(args) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Core(c) if c.is_precondition() => eprintln!("precondition violated: {c}"),
                _ => eprintln!("error: {e}"),
            }
            e.exit_code()
        }
    }
}
