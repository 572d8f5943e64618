//! `imtl`: dataset generation, training runs, comparison suites, ablations,
//! transfer analysis, selection regimes and plots.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime abort.
//! Diagnostics go to stderr; stdout carries `key=value` progress lines.

mod commands;
mod config;
mod plot;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use imtl_core::Error;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Format { .. } | Error::Io { .. } => 2,
            Error::Numeric { .. } | Error::Aborted { .. } | Error::Internal(_) => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "imtl", version, about = "Interleaved multi-task learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV.
    GenData {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Minibatch size the dataset must be able to serve.
        #[arg(long, default_value_t = 100)]
        batch: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one configuration over its seeds.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run only this seed (overrides IMTL_SEED and the config).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write each seed's datasets next to its checkpoint.
        #[arg(long)]
        save_data: bool,
    },
    /// Run several configurations and tabulate them side by side.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Blocked training in every task order, with forgetting deltas.
    BlockSuite {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Architecture ablations of one configuration.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        /// One of full, no-flag, no-attn, no-both; all four when omitted.
        #[arg(long)]
        mode: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// EMLP sensitivity sweep with LP and SINGLE references.
    KSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = imtl_core::harness::DEFAULT_K_LIST)]
        ks: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Transfer report from trained multi-task checkpoints.
    Transfer {
        #[arg(long, num_args = 1.., required = true)]
        checkpoint: Vec<PathBuf>,
        /// Directory of `<task>.csv` files; give one per checkpoint or one
        /// shared by all.
        #[arg(long, num_args = 1.., required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sliding-window engagement counts of a metrics log.
    Regime {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long, default_value_t = imtl_core::harness::REGIME_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = imtl_core::harness::REGIME_STEP)]
        step: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render line charts described by a plot spec file.
    Plot {
        #[arg(long)]
        spec: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenData {
            task,
            n,
            seed,
            batch,
            out,
        } => commands::gen_data(&task, n, seed, batch, &out),
        Command::Run {
            config,
            seed,
            out,
            save_data,
        } => commands::run(&config, seed, &out, save_data),
        Command::Compare { configs, out } => commands::compare(&configs, &out),
        Command::BlockSuite { config, out } => commands::block_suite(&config, &out),
        Command::Ablate { config, mode, out } => commands::ablate(&config, &mode, &out),
        Command::KSweep { config, ks, out } => commands::k_sweep(&config, &ks, &out),
        Command::Transfer { checkpoint, data, out } => commands::transfer(&checkpoint, &data, out.as_deref()),
        Command::Regime {
            metrics,
            window,
            step,
            out,
        } => commands::regime(&metrics, window, step, out.as_deref()),
        Command::Plot { spec } => plot::run(&spec),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
