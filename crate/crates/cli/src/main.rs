//! `spdmeans` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 non-convergence,
//! 3 certification or verification failure.

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use spdmeans::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("input: {0}")]
    Input(String),
    #[error("not converged: {0}")]
    NonConvergence(String),
    #[error("certification failed: {0}")]
    Certification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Certification(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NonConvergence(_) | CoreError::Divergence(_) | CoreError::InternalConsistency(_) => {
                CliError::NonConvergence(e.to_string())
            }
            CoreError::Unknown(_) | CoreError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "spdmeans", version, about = "Means of SPD matrices and the spectral mean equation")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Solver residual target (for `verify` and `conjecture`: check tolerance).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Iteration cap for every solver.
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Problem file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Report file; written atomically. Without it the report goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MeanKind {
    Arithmetic,
    Harmonic,
    LogEuclidean,
    Karcher,
    Power,
    Wasserstein,
    Generalized,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mean2Kind {
    Geo,
    Spectral,
    Wasserstein,
    Alt,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multivariable mean of the input problem.
    Mean {
        #[arg(long, value_enum)]
        kind: MeanKind,
        /// Order of the power mean.
        #[arg(long)]
        t: Option<f64>,
        /// Generator for the generalized Karcher mean.
        #[arg(long)]
        g: Option<String>,
    },
    /// Two-variable mean of the first two input matrices.
    Mean2 {
        #[arg(long, value_enum)]
        kind: Mean2Kind,
        #[arg(long)]
        t: f64,
        /// Representing function for `--kind alt`.
        #[arg(long)]
        f: Option<String>,
    },
    /// Solve sum w_i g(A_i # X^-1) = 0 from one start or many.
    Solve {
        #[arg(long)]
        g: String,
        /// Start matrix document ({"n", "data"}); default is the arithmetic mean.
        #[arg(long)]
        x0: Option<PathBuf>,
        #[arg(long, requires = "seed")]
        starts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Multistart exploration of the solution set.
    Explore {
        #[arg(long)]
        g: String,
        #[arg(long)]
        starts: usize,
        #[arg(long)]
        seed: u64,
    },
    /// The non-uniqueness example.
    Counterexample {
        #[command(subcommand)]
        action: CounterAction,
    },
    /// Run a property suite.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Explore an open comparison question.
    Conjecture {
        #[arg(long)]
        id: String,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// Number of matrices for `p-power-sp`.
        #[arg(long, default_value_t = 3)]
        m: usize,
    },
    /// Write a random problem file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        cond: f64,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum CounterAction {
    /// Emit the instance and X0.
    Build,
    /// Both solutions and the rectangle certificate.
    Reproduce {
        #[arg(long, default_value_t = spdmeans::counterex::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0.0)]
        margin: f64,
    },
    /// Sampled sign check on a rectangle in (u, v).
    Certify {
        /// u_lo,u_hi,v_lo,v_hi; default is the reference rectangle.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        rect: Option<Vec<f64>>,
        #[arg(long, default_value_t = spdmeans::counterex::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0.0)]
        margin: f64,
    },
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(k) = cli.common.threads {
        if k == 0 {
            eprintln!("usage: --threads must be positive");
            return ExitCode::from(1);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let start = Instant::now();
    match commands::run(&cli, argv[1..].to_vec(), start) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
