//! `deepactif` command-line driver.
//!
//! Exit codes: 0 success, 1 partial failure (report still written), 2 usage or
//! configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[global_allocator]
static ALLOC: deepactif::bench::CountingAllocator = deepactif::bench::CountingAllocator;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0} of {1} grid cells failed; report written")]
    Partial(usize, usize),
}

impl CliError {
    pub fn usage(e: deepactif::Error) -> Self {
        CliError::Usage(e.to_string())
    }

    pub fn runtime(e: deepactif::Error) -> Self {
        use deepactif::Error as E;
        match e {
            E::Config(_) | E::Schema { .. } | E::Parse { .. } | E::Json(_) | E::Csv(_) | E::WeightFormat(_) | E::Io { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) | CliError::Partial(..) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "deepactif", version, about = "Feature attribution for LSTM sequence regressors")]
struct Cli {
    /// Concurrent evaluation cells.
    #[arg(long, global = true, env = "DEEPACTIF_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with planted relevant features.
    Synth {
        /// Synthetic-data config (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on the whole configured dataset.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score features of a dataset with a trained model.
    Attribute {
        /// Weight file (binary or JSON).
        #[arg(long)]
        weights: PathBuf,
        /// Dataset CSV.
        #[arg(long)]
        dataset: PathBuf,
        /// Method tag, e.g. deepactif-lstm.
        #[arg(long)]
        method: Option<String>,
        /// Attribution config (JSON); `--method` overrides its method.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = deepactif::data::DEFAULT_WINDOW_LEN)]
        window_len: usize,
        #[arg(long, default_value_t = deepactif::data::DEFAULT_STRIDE)]
        stride: usize,
        /// Skip per-subject normalization.
        #[arg(long)]
        raw: bool,
        /// Output scores file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Full top-k evaluation grid with statistics.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Paired statistics from an existing report.
    Stats {
        /// Stats config (JSON) with `report`, `reference` and optional `k`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        reference: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time and measure attribution methods on one subject's data.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate, compare and benchmark in one go.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Synth { config, out } => commands::synth(&config, &out),
        Command::Train { config, out } => commands::train(&config, &out),
        Command::Attribute {
            weights,
            dataset,
            method,
            config,
            window_len,
            stride,
            raw,
            out,
        } => commands::attribute(&commands::AttributeArgs {
            weights,
            dataset,
            method,
            config,
            window_len,
            stride,
            normalize: !raw,
            out,
        }),
        Command::Evaluate { config, out } => commands::evaluate(&config, &out, cli.jobs, false),
        Command::Stats {
            config,
            report,
            reference,
            out,
        } => commands::stats(config.as_deref(), report, reference, &out),
        Command::Bench { config, out } => commands::bench(&config, &out),
        Command::Run { config, out } => commands::evaluate(&config, &out, cli.jobs, true),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
