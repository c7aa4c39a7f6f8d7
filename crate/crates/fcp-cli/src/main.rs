//! `fcp` — command-line driver for the folded-concave-penalty toolkit.
//!
//! Subcommands:
//! * `svm-bench`  — classification benchmark across dimensions, four variants
//! * `nn-train`   — penalized two-hidden-layer regression experiment
//! * `solve`      — run the penalized solver on a CSV dataset
//! * `check`      — evaluate the stationarity certificate for a given vector
//!
//! Exit codes: 0 success, 1 invalid input, 2 partial experiment failure,
//! 3 certificate failure.

mod commands;
mod config;
mod output;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use commands::{LossKind, NnTrainSettings, ProblemSettings, SvmBenchSettings};
use config::{resolve, Config};
use std::path::PathBuf;
use std::process::ExitCode;

/// A command failure carrying its process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config, or input data — exit 1, nothing written.
    Invalid(String),
    /// Some replications failed but results were written — exit 2.
    Partial(String),
    /// The run completed but the stationarity certificate failed — exit 3.
    Certificate(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Partial(_) => 2,
            Failure::Certificate(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Invalid(m) | Failure::Partial(m) | Failure::Certificate(m) => f.write_str(m),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

/// Fully resolved run-wide settings (flags over config file over defaults).
pub struct RunManifest {
    pub seed: u64,
    pub output_path: PathBuf,
    pub threads: Option<usize>,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value configuration file; command-line flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for all pseudo-random streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for replication-level parallelism (results are
    /// identical for any value).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Parser)]
#[command(name = "fcp", version, about = "Folded-concave penalized estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark four classifier variants across feature dimensions.
    SvmBench {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated feature dimensions to sweep.
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<usize>>,
        /// Independent replications per dimension.
        #[arg(long)]
        replications: Option<usize>,
        /// Folded-concave penalty level for the fcp variant.
        #[arg(long)]
        lambda: Option<f64>,
        /// Penalty concavity parameter (tail knot at a*lambda).
        #[arg(long)]
        a: Option<f64>,
        /// Ridge weight for the l2 variant.
        #[arg(long)]
        rho: Option<f64>,
        /// Stationarity accuracy for the fcp solver.
        #[arg(long)]
        gamma_hat: Option<f64>,
    },
    /// Train penalized two-hidden-layer networks and sweep suboptimality
    /// against test error.
    NnTrain {
        #[command(flatten)]
        common: CommonArgs,
        /// Independent replications.
        #[arg(long)]
        replications: Option<usize>,
        /// Penalty level.
        #[arg(long)]
        lambda: Option<f64>,
        /// Stationarity accuracy.
        #[arg(long)]
        gamma_hat: Option<f64>,
    },
    /// Solve one penalized problem from a CSV dataset (response first
    /// column, features after) and write the solution.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Input dataset CSV.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Loss: squared or smoothed_hinge.
        #[arg(long)]
        loss: Option<LossKind>,
        /// Penalty level.
        #[arg(long)]
        lambda: Option<f64>,
        /// Penalty concavity parameter; defaults to half the stability
        /// limit 1/M of the loss curvature.
        #[arg(long)]
        a: Option<f64>,
        /// Ridge weight (smoothed_hinge only).
        #[arg(long)]
        rho: Option<f64>,
        /// Gradient step size; defaults to 1/M.
        #[arg(long)]
        alpha_hat: Option<f64>,
        /// Stationarity accuracy.
        #[arg(long)]
        gamma_hat: Option<f64>,
    },
    /// Check the stationarity certificate of a candidate vector against a
    /// CSV dataset; writes nothing.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Input dataset CSV.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Loss: squared or smoothed_hinge.
        #[arg(long)]
        loss: Option<LossKind>,
        /// Candidate vector, comma-separated, one value per feature.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        beta: Option<Vec<f64>>,
        /// Penalty level.
        #[arg(long)]
        lambda: Option<f64>,
        /// Penalty concavity parameter; defaults to half the stability
        /// limit 1/M of the loss curvature.
        #[arg(long)]
        a: Option<f64>,
        /// Ridge weight (smoothed_hinge only).
        #[arg(long)]
        rho: Option<f64>,
        /// Stationarity accuracy.
        #[arg(long)]
        gamma_hat: Option<f64>,
    },
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::SvmBench { common, .. }
            | Command::NnTrain { common, .. }
            | Command::Solve { common, .. }
            | Command::Check { common, .. } => common,
        }
    }

    fn allowed_keys(&self) -> &'static [&'static str] {
        match self {
            Command::SvmBench { .. } => commands::SVM_BENCH_KEYS,
            Command::NnTrain { .. } => commands::NN_TRAIN_KEYS,
            Command::Solve { .. } => commands::SOLVE_KEYS,
            Command::Check { .. } => commands::CHECK_KEYS,
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let common = cli.command.common();
    let cfg_file = Config::load(common.config.as_deref(), cli.command.allowed_keys())?;
    let manifest = RunManifest {
        seed: resolve(common.seed, cfg_file.get("seed")?, 20260815),
        output_path: resolve(common.out.clone(), cfg_file.get("out")?, PathBuf::from(".")),
        threads: common.threads.or(cfg_file.get("threads")?),
    };

    #[cfg(feature = "parallel")]
    if let Some(t) = manifest.threads {
        if t == 0 {
            return Err(Failure::Invalid("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Invalid(format!("cannot build thread pool: {e}")))?;
    }

    match cli.command {
        Command::SvmBench {
            p_grid,
            replications,
            lambda,
            a,
            rho,
            gamma_hat,
            ..
        } => commands::cmd_svm_bench(
            &manifest,
            &cfg_file,
            SvmBenchSettings {
                p_grid,
                replications,
                rho,
                lambda,
                lambda_l1: None,
                a,
                gamma_hat,
            },
        ),
        Command::NnTrain {
            replications,
            lambda,
            gamma_hat,
            ..
        } => commands::cmd_nn_train(
            &manifest,
            &cfg_file,
            NnTrainSettings {
                replications,
                lambda,
                gamma_hat,
                noise_sd: None,
            },
        ),
        Command::Solve {
            input,
            loss,
            lambda,
            a,
            rho,
            alpha_hat,
            gamma_hat,
            ..
        } => commands::cmd_solve(
            &manifest,
            &cfg_file,
            ProblemSettings {
                input,
                loss,
                lambda,
                a,
                rho,
                alpha_hat,
                gamma_hat,
                beta: None,
            },
        ),
        Command::Check {
            input,
            loss,
            beta,
            lambda,
            a,
            rho,
            gamma_hat,
            ..
        } => commands::cmd_check(
            &manifest,
            &cfg_file,
            ProblemSettings {
                input,
                loss,
                lambda,
                a,
                rho,
                alpha_hat: None,
                gamma_hat,
                beta,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fcp: error: {f}");
            ExitCode::from(f.code())
        }
    }
}
