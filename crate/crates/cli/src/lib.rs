//! Command-line entry points for wavequant experiments.
//!
//! Every command reads a single JSON run configuration (see [`config`]),
//! optionally adjusted with `--set key=value`, and writes JSON artifacts that
//! carry the resolved configuration and the tool version.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{GridFormat, Outcome};
pub use config::RunConfig;
pub use error::{CliError, CliResult, ErrorKind};

/// `git describe` of the source tree, or the package version.
pub const VERSION: &str = env!("WAVEQUANT_VERSION");

pub const CHECKPOINT_FILE: &str = "model.wqmd";
pub const WAVEBOOK_FILE: &str = "wavebook.wqbk";
pub const HISTORY_FILE: &str = "history.json";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Parser)]
#[command(name = "wavequant", version = VERSION, about = "Wavelet-tokenized time series models")]
pub struct Cli {
    /// Validate inputs and print the plan without touching the filesystem.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long, short)]
    pub config: PathBuf,
    /// Override a configuration value, e.g. `--set train.lr=1e-3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a wavebook from a scaling filter.
    BuildWavebook {
        /// `haar`, `db2` or `file:<path>`.
        #[arg(long)]
        filter: String,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        lambda: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tokenize a single-column CSV series.
    Tokenize {
        #[arg(long)]
        wavebook: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "binary")]
        format: GridFormat,
    },
    /// Train from scratch (supervised or multi-domain pretraining).
    Pretrain(RunArgs),
    /// Fine-tune a checkpoint on the target dataset.
    Finetune {
        #[command(flatten)]
        run: RunArgs,
        /// Fraction of the training windows to use.
        #[arg(long)]
        fewshot: Option<f64>,
    },
    /// Score a checkpoint on the test split.
    Evaluate(RunArgs),
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    let dry = cli.dry_run;
    match cli.command {
        Command::BuildWavebook { filter, m, lambda, out } => {
            commands::cmd_build_wavebook(&filter, m, lambda, &out, dry)
        }
        Command::Tokenize { wavebook, input, out, format } => {
            commands::cmd_tokenize(&wavebook, &input, &out, format, dry)
        }
        Command::Pretrain(a) => commands::cmd_pretrain(RunConfig::load(&a.config, &a.overrides)?, dry),
        Command::Finetune { run, fewshot } => {
            let mut overrides = run.overrides;
            if let Some(f) = fewshot {
                overrides.push(format!("train.fewshot_fraction={f}"));
            }
            commands::cmd_finetune(RunConfig::load(&run.config, &overrides)?, dry)
        }
        Command::Evaluate(a) => commands::cmd_evaluate(RunConfig::load(&a.config, &a.overrides)?, dry),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> CliResult<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::config(e.to_string().trim_end()))?;
    run(cli)
}
