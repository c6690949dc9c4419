//! Command-line front end of the benchmark driver.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure,
//! 4 I/O error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use cutfsi::driver::{self, BenchmarkTable, ConfigError, DriverError};
use cutfsi::postproc::PostprocError;
use cutfsi::solver::{configure_threads, RunConfig, SolverError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "cutfsi",
    version,
    about = "Cut finite element FSI benchmark driver"
)]
pub struct Args {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Refinement level, overrides the config file.
    #[arg(long)]
    pub level: Option<usize>,
    /// Ghost penalty weight bound `w_max`, overrides the config file.
    #[arg(long)]
    pub wmax: Option<f64>,
    /// Output directory, overrides the config file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 runs assembly and factorization sequentially
    /// with reproducible results.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Channel flow without the disc.
    #[arg(long)]
    pub fluid_only: bool,
}

/// Config file (or defaults) with the command-line overrides applied.
pub fn load_config(args: &Args) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &args.config {
        Some(path) => driver::parse_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(level) = args.level {
        cfg.level = level;
    }
    if let Some(w) = args.wmax {
        cfg.params.w_max = w;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if args.fluid_only {
        cfg.fluid_only = true;
    }
    driver::validate(&cfg)?;
    Ok(cfg)
}

pub fn exit_code(err: &DriverError) -> u8 {
    match err {
        DriverError::Config(_) | DriverError::Solver(SolverError::InvalidConfig(_)) => EXIT_CONFIG,
        DriverError::Solver(_) | DriverError::Output(PostprocError::PointNotFound { .. }) => {
            EXIT_SOLVER
        }
        DriverError::Output(_) | DriverError::Io { .. } => EXIT_IO,
    }
}

/// Parses `argv` (program name first), runs the benchmark and prints the
/// table row. Returns the process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match load_config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(n) = args.threads {
        configure_threads(n);
    }
    log::info!(
        "level {}, w_max {}, output in {}",
        cfg.level,
        cfg.params.w_max,
        cfg.out_dir.display()
    );
    match driver::run_benchmark(&cfg) {
        Ok(run) => {
            println!("{}", BenchmarkTable::HEADER);
            println!("{}", BenchmarkTable::RULE);
            println!("{}", run.row);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
