//! `nfcrb`: runs the bound experiments and writes CSV, JSON and SVG results.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 numerical failure,
//! 3 a verification check failed.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Run;
use crate::config::{extract_overrides, ExperimentConfig, Format};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numerical(nfcrb::Error),
    VerifyFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::VerifyFailed => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical error: {e}"),
            CliError::VerifyFailed => write!(f, "verification failed"),
        }
    }
}

impl From<nfcrb::Error> for CliError {
    fn from(e: nfcrb::Error) -> Self {
        match e {
            nfcrb::Error::InvalidArgument(m) => CliError::Usage(m),
            other => CliError::Numerical(other),
        }
    }
}

/// Any config key can also be given as `--section.key value`, for example
/// `--ofdm.B_hz 8e8` or `--paths.0.r_m 20`.
#[derive(Parser, Debug)]
#[command(name = "nfcrb", version, about = "Near-field wideband bound experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relative covariance mismatch against the carrier over (alpha, range).
    Mismatch(Common),
    /// Bounds and diversity gains versus bandwidth.
    SweepBw(Common),
    /// Bounds versus source range, with the full-array reference.
    SweepRange(Common),
    /// Bounds and compression gap versus the number of RF chains.
    SweepNrf(Common),
    /// Data and geometric diversity split at the configured bandwidth.
    Decompose(Common),
    /// Numerical self-checks; exits 3 if any fails.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// First combiner seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds.
    #[arg(long)]
    seeds: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output formats, repeatable or comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Vec<Format>,
    /// Range marker drawn on the range-sweep plot.
    #[arg(long = "ebrd-m")]
    ebrd_m: Option<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Perturb the analytic derivatives so the derivative check must fail.
    #[arg(long)]
    inject_fault: bool,
}

fn configure(common: &Common, overrides: &[(String, String)]) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(common.config.as_deref(), overrides)?;
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    if let Some(s) = common.seed {
        cfg.combiner.seed = s;
        cfg.combiner.seed_list = None;
    }
    if let Some(n) = common.seeds {
        if n == 0 {
            return Err(CliError::Usage("--seeds must be at least 1".into()));
        }
        cfg.combiner.seeds = n;
        cfg.combiner.seed_list = None;
    }
    if !common.format.is_empty() {
        cfg.output.formats = common.format.clone();
    }
    if common.ebrd_m.is_some() {
        cfg.sweep.ebrd_m = common.ebrd_m;
    }
    if let Some(w) = common.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    Ok(cfg)
}

fn run(cli: Cli, overrides: &[(String, String)]) -> Result<(), CliError> {
    let (common, name, fault) = match &cli.command {
        Command::Mismatch(c) => (c, "mismatch", false),
        Command::SweepBw(c) => (c, "sweep-bw", false),
        Command::SweepRange(c) => (c, "sweep-range", false),
        Command::SweepNrf(c) => (c, "sweep-nrf", false),
        Command::Decompose(c) => (c, "decompose", false),
        Command::Verify(v) => (&v.common, "verify", v.inject_fault),
    };
    let run = Run { cfg: configure(common, overrides)?, command: name, corrupt_derivative: fault };
    match cli.command {
        Command::Mismatch(_) => commands::mismatch(&run),
        Command::SweepBw(_) => commands::sweep_bw(&run),
        Command::SweepRange(_) => commands::sweep_range_cmd(&run),
        Command::SweepNrf(_) => commands::sweep_nrf(&run),
        Command::Decompose(_) => commands::decompose_cmd(&run),
        Command::Verify(_) => {
            let report = commands::verify_cmd(&run)?;
            if report.passed {
                Ok(())
            } else {
                Err(CliError::VerifyFailed)
            }
        }
    }
}

fn main() -> ExitCode {
    let (args, overrides) = match extract_overrides(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("nfcrb: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nfcrb: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
