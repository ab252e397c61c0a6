//! `zak`: profiles, simulations, checks and rate fits for the Zakharov
//! collapse laboratory.
//!
//! Exit codes: 0 ok, 1 configuration error, 2 profile failure, 3 run stopped
//! on blowup, 4 failed check.

mod check;
mod output;
mod profile;
mod rates;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use zakharov::profiles::Family;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_PROFILE: u8 = 2;
pub const EXIT_BLOWUP: u8 = 3;
pub const EXIT_CHECK: u8 = 4;

/// An error carrying the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn config(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            error: error.into(),
        }
    }
}

/// Maps core errors onto the exit-code contract.
impl From<zakharov::Error> for Failure {
    fn from(e: zakharov::Error) -> Self {
        use zakharov::Error as E;
        let code = match e {
            E::BracketFailure { .. }
            | E::NewtonDivergence { .. }
            | E::ContinuationStalled { .. }
            | E::Resonance { .. }
            | E::StepUnderflow { .. } => EXIT_PROFILE,
            _ => EXIT_CONFIG,
        };
        Failure { code, error: e.into() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::config(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::config(e)
    }
}

pub type CmdResult = Result<u8, Failure>;

#[derive(Debug, Parser)]
#[command(name = "zak", version, about = "Collapse laboratory for the scalar Zakharov system")]
struct Cli {
    /// Output root; defaults to $ZAK_OUT_DIR, then ./zak-out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a self-similar profile and write it with a summary.
    Profile {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        /// Ladder index for `ladder3d`.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Family parameter for `family2d`.
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Run one configuration, or several with `--sweep`.
    Simulate {
        #[arg(long, required_unless_present = "sweep", conflicts_with = "sweep")]
        config: Option<PathBuf>,
        /// Config files, or directories whose `*.toml` files are all run.
        #[arg(long, num_args = 1..)]
        sweep: Vec<PathBuf>,
        /// Worker threads for `--sweep`; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the invariant and inequality suites and print a pass/fail table.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random samples per dimension for the symbol check.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Re-fit blowup exponents from an existing series CSV.
    Rates {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        dim: usize,
        #[arg(long, num_args = 1.., default_values_t = vec![0.0])]
        ell: Vec<f64>,
    },
}

fn parse_family(s: &str) -> Result<Family, String> {
    match s {
        "ground2d" => Ok(Family::Ground2d),
        "family2d" => Ok(Family::Family2d),
        "ladder3d" => Ok(Family::Ladder3d),
        other => Err(format!("unknown family {other:?}; expected ground2d, family2d or ladder3d")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let root = output::out_root(cli.out.as_deref());
    let result = match cli.command {
        Command::Profile { family, k, a, tol } => profile::run(&root, family, k, a, tol),
        Command::Simulate { config, sweep, jobs } => match config {
            Some(path) => simulate::run_one(&root, &path),
            None => simulate::run_sweep(&root, &sweep, jobs),
        },
        Command::Check { seed, samples } => check::run(&root, seed, samples),
        Command::Rates { series, dim, ell } => rates::run(&root, &series, dim, &ell),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("zak: error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
