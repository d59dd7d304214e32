use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "flowcast",
    version,
    about = "Traffic flow forecasting with transfer and online learning"
)]
pub struct Cli {
    /// Overrides every seed in the config files. With several `generate`
    /// configs, road i gets seed + i.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// TOML config file; `generate` accepts one per road.
    #[arg(long = "config", global = true, value_name = "PATH")]
    pub configs: Vec<PathBuf>,

    /// Output file, or directory for `generate` and `run-scenarios`.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,

    /// Days in a calendar year (365 by default; 28 for desk-scale runs).
    #[arg(long, global = true, value_name = "DAYS")]
    pub scale_days: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic corridors as flow CSV plus loop manifest.
    Generate,
    /// Train a fresh model on one named calendar range of a road.
    Train {
        /// Flow CSV; its loop manifest is expected next to it with a `.manifest` extension.
        #[arg(long)]
        data: PathBuf,
    },
    /// Copy a model, optionally retraining it on target data.
    Transfer {
        #[arg(long)]
        model: PathBuf,
        /// Target road to retrain on.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run PS1, PS2 and PS3 offline and online, writing one trace CSV per report.
    RunScenarios {
        #[arg(long, num_args = 1.., required = true)]
        donors: Vec<PathBuf>,
        #[arg(long)]
        target: PathBuf,
    },
    /// Test a model on a named calendar range and write its prediction trace.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "test_year2")]
        range: String,
        /// Update online at this learning rate instead of testing frozen.
        #[arg(long)]
        online_lr: Option<f64>,
        #[arg(long, default_value_t = 672)]
        window: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Train { .. } => "train",
            Command::Transfer { .. } => "transfer",
            Command::RunScenarios { .. } => "run-scenarios",
            Command::Evaluate { .. } => "evaluate",
        }
    }
}
