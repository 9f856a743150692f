//! Single binary, five subcommands: `prepare`, `train`, `eval`, `ces`,
//! `flops`. Configuration comes from an optional TOML file plus flags
//! (flags win); one root seed drives every random stream; every output
//! file records the config hash and seed that produced it. Log verbosity
//! is controlled by the `BR_LOG` environment variable.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use boundedreg_cli::commands;
use boundedreg_cli::commands::{ces::CesArgs, flops::FlopsArgs};
use boundedreg_cli::config::{config_hash, load_run_config, Overrides};

#[derive(Parser)]
#[command(
    name = "boundedreg",
    version,
    about = "Bounded-compute multimodal rating regression toolkit"
)]
struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root seed for every random stream (shuffles, dropout, init).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter, stratify and split a raw JSONL metadata file.
    Prepare {
        /// Input JSON-lines metadata file.
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        /// Output directory for train.jsonl, val.jsonl and rejects.csv.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Per-tail sample size per category.
        #[arg(long, value_name = "N")]
        k: Option<usize>,
        /// Validation holdout size.
        #[arg(long, value_name = "N")]
        holdout: Option<usize>,
    },
    /// Train the regression head on a prepared dataset directory.
    Train {
        /// Prepared dataset directory (from `prepare`).
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        /// Output directory for checkpoint.blob and history.csv.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Square input resolution in pixels.
        #[arg(long, value_name = "N")]
        resolution: Option<usize>,
        /// Per-field character budget for the metadata prompt.
        #[arg(long, value_name = "N")]
        char_limit: Option<usize>,
        /// Maximum training epochs.
        #[arg(long, value_name = "N")]
        max_epochs: Option<usize>,
    },
    /// Evaluate a checkpoint on a prepared dataset.
    Eval {
        /// Checkpoint written by `train`.
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
        /// Prepared dataset directory or a single JSONL file.
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        /// Output directory for metrics.csv and density.csv.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Square input resolution in pixels.
        #[arg(long, value_name = "N")]
        resolution: Option<usize>,
        /// Per-field character budget for the metadata prompt.
        #[arg(long, value_name = "N")]
        char_limit: Option<usize>,
    },
    /// Score a correlation result against parameter/FLOP budgets.
    Ces {
        /// Pearson correlation to score.
        #[arg(long, allow_hyphen_values = true)]
        plcc: f64,
        /// Architecture description (TOML).
        #[arg(long, value_name = "PATH")]
        archspec: PathBuf,
        /// Square input resolution in pixels.
        #[arg(long, default_value_t = 384, value_name = "N")]
        resolution: u64,
        /// Per-field character budget.
        #[arg(long, default_value_t = 100, value_name = "N")]
        char_limit: u64,
        /// Use this FLOP count instead of the analytic estimate.
        #[arg(long, value_name = "N")]
        flops: Option<f64>,
        /// Write ces.csv here instead of printing to stdout.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Report the analytic parameter and FLOP model for an architecture.
    Flops {
        /// Architecture description (TOML).
        #[arg(long, value_name = "PATH")]
        archspec: PathBuf,
        /// Square input resolution in pixels.
        #[arg(long, default_value_t = 384, value_name = "N")]
        resolution: u64,
        /// Per-field character budget.
        #[arg(long, default_value_t = 100, value_name = "N")]
        char_limit: u64,
        /// Write flops.csv here instead of printing to stdout.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut ov = Overrides { seed: cli.seed, ..Overrides::default() };
    match &cli.command {
        Command::Prepare { k, holdout, .. } => {
            ov.k = *k;
            ov.holdout = *holdout;
        }
        Command::Train { resolution, char_limit, max_epochs, .. } => {
            ov.resolution = *resolution;
            ov.char_limit = *char_limit;
            ov.max_epochs = *max_epochs;
        }
        Command::Eval { resolution, char_limit, .. } => {
            ov.resolution = *resolution;
            ov.char_limit = *char_limit;
        }
        Command::Ces { .. } | Command::Flops { .. } => {}
    }
    let rc = load_run_config(cli.config.as_deref(), &ov)?;
    let hash = config_hash(&rc);

    match &cli.command {
        Command::Prepare { data, out, .. } => commands::prepare::run(data, out, &rc, &hash),
        Command::Train { data, out, .. } => commands::train::run(data, out, &rc, &hash),
        Command::Eval { checkpoint, data, out, .. } => {
            commands::eval::run(checkpoint, data, out, &rc, &hash)
        }
        Command::Ces { plcc, archspec, resolution, char_limit, flops, out } => {
            commands::ces::run(
                &CesArgs {
                    plcc: *plcc,
                    archspec,
                    resolution: *resolution,
                    char_limit: *char_limit,
                    flops_override: *flops,
                    out: out.as_deref(),
                },
                &rc,
                &hash,
            )
        }
        Command::Flops { archspec, resolution, char_limit, out } => commands::flops::run(
            &FlopsArgs {
                archspec,
                resolution: *resolution,
                char_limit: *char_limit,
                out: out.as_deref(),
            },
            &rc,
            &hash,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("BR_LOG")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
