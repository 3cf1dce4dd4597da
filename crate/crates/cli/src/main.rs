//! `ulacov`: plan, run and validate unadjusted Langevin covariance estimation.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 refused by the gradient-evaluation guard.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ulacov::sampler::Mode;
use ulacov::Error;

use commands::{Overrides, PlanArgs};

#[derive(Parser)]
#[command(name = "ulacov", version, about = "Covariance estimation with the unadjusted Langevin algorithm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    Parallel,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Single => Mode::SingleChain,
            ModeArg::Parallel => Mode::Parallel,
        }
    }
}

#[derive(clap::Args)]
struct CommonRunArgs {
    /// JSON run configuration ("schema": 1).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u64>,
    /// Output directory; defaults to the config's `outputs.dir`, then $ULACOV_OUTPUT_DIR.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl CommonRunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            replications: self.replications,
            out_dir: self.out_dir.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the step size, burn-in and sample count for a target accuracy.
    Plan {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        /// Step size below the planner's cap.
        #[arg(long)]
        eta: Option<f64>,
        /// Scale the sample or chain count by this factor in (0, 1].
        #[arg(long)]
        relax: Option<f64>,
    },
    /// Run a replicated experiment and write per-replication CSV plus a JSON summary.
    Run {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Scale the planned sample or chain count by this factor in (0, 1].
        #[arg(long)]
        relax: Option<f64>,
    },
    /// Measure the sampling error over a grid of sample sizes.
    RateSweep {
        #[command(flatten)]
        common: CommonRunArgs,
    },
    /// Compare single-chain and parallel-chain runs at scaled plans.
    Compare {
        #[command(flatten)]
        common: CommonRunArgs,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Largest eigenvalue of the stationary AR(1) autocovariance for doubling block lengths.
    Ar1 {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        nmax: usize,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Refused { .. } => 3,
        Error::Config(_) | Error::Input(_) | Error::Unavailable(_) | Error::Json(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan {
            mode,
            alpha,
            beta,
            dim,
            eps,
            delta,
            eta,
            relax,
        } => commands::cmd_plan(&PlanArgs {
            mode: mode.into(),
            alpha,
            beta,
            dim,
            eps,
            delta,
            eta,
            relax,
        }),
        Command::Run { common, relax } => commands::cmd_run(&common.config, relax, &common.overrides()),
        Command::RateSweep { common } => commands::cmd_rate_sweep(&common.config, &common.overrides()),
        Command::Compare { common, gamma } => commands::cmd_compare(&common.config, gamma, &common.overrides()),
        Command::Ar1 { alpha, eta, nmax } => commands::cmd_ar1(alpha, eta, nmax),
    };
    match result {
        Ok(text) => {
            if text.ends_with('\n') {
                print!("{text}");
            } else {
                println!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
