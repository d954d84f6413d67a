//! Argument parsing, dispatch and exit codes.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use refmaps::config::{DEFAULT_CG_TOL, DEFAULT_DELTA, DEFAULT_MAX_OUTER_ITERS, DEFAULT_REL_ENERGY_TOL};
use refmaps::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "refmaps", version, about = "Multi-view reflectance and lighting estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic dataset from a TOML scene spec.
    Generate {
        spec: PathBuf,
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate reflectance maps and lighting of a dataset.
    Estimate(EstimateArgs),
    /// Compare an estimate with a dataset's ground truth.
    Evaluate {
        estimate_dir: PathBuf,
        dataset: PathBuf,
        /// Also write the report as CSV to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render images from reflectance maps, the dataset's geometry and a
    /// lighting file (one line per channel, or per view and channel).
    Render {
        reflectance_dir: PathBuf,
        dataset: PathBuf,
        lighting_file: PathBuf,
        out_dir: PathBuf,
    },
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct EstimateArgs {
    dataset: PathBuf,
    out_dir: PathBuf,
    /// Smoothness weight (required).
    #[arg(long)]
    lambda: f64,
    /// Multi-view consistency weight (required).
    #[arg(long)]
    mu: f64,
    /// Huber threshold.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Stop when the relative energy change falls below this.
    #[arg(long, default_value_t = DEFAULT_REL_ENERGY_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_OUTER_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = DEFAULT_CG_TOL)]
    cg_tol: f64,
    #[arg(long)]
    cg_max_iters: Option<usize>,
    /// Keep the raw reflectance scale instead of normalizing its maximum to 1.
    #[arg(long)]
    no_normalize: bool,
    /// Convergence trace CSV; 3-channel datasets get `_ch{k}` suffixes.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Fill the trace's seconds column (otherwise 0, for reproducible files).
    #[arg(long)]
    trace_timing: bool,
    #[arg(long, env = "REFMAPS_THREADS", default_value_t = 1)]
    threads: usize,
    /// Also write max-normalized 8-bit PNG previews of the reflectance.
    #[arg(long)]
    preview: bool,
}

/// Failure of a command, carrying its exit code.
pub(crate) enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NumericalFailure { .. } => EXIT_NUMERICAL,
        _ => EXIT_DATA,
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Generate { spec, out_dir, seed } => commands::generate(&spec, &out_dir, seed),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Evaluate {
            estimate_dir,
            dataset,
            csv,
        } => commands::evaluate(&estimate_dir, &dataset, csv.as_deref()),
        Command::Render {
            reflectance_dir,
            dataset,
            lighting_file,
            out_dir,
        } => commands::render(&reflectance_dir, &dataset, &lighting_file, &out_dir),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
