//! `recase`: corpus preparation, statistics, training, sweeps, transfer,
//! evaluation and prediction for joint truecasing and punctuation
//! restoration.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
//! Failures print one JSON error record on stderr; logs are JSON lines on
//! stderr, filtered by `RECASE_LOG` (default `info`).

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use recase::training::AblationTarget;
use serde_json::json;

use config::RunConfig;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "recase", version, about = "Joint truecasing and punctuation restoration")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set train.lambda=0.25`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Seed for every random choice of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract labels from raw JSONL and split into train/dev/test.
    Prepare {
        /// Input corpus (JSONL).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Directory for outputs and the resolved config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Label counts and next-word casing distribution of a labeled corpus.
    Stats {
        /// Input corpus (JSONL).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Directory for outputs and the resolved config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Train a model, optionally continuing from a checkpoint.
    Train {
        /// Labeled training corpus.
        #[arg(long)]
        train: Option<PathBuf>,
        /// Labeled dev corpus for model selection.
        #[arg(long)]
        dev: Option<PathBuf>,
        /// Checkpoint directory to continue from.
        #[arg(long)]
        init: Option<PathBuf>,
        /// Casing loss weight; punctuation gets 1 - λ.
        #[arg(long)]
        lambda: Option<f64>,
        /// Maximum training epochs.
        #[arg(long)]
        epochs: Option<usize>,
        /// Directory for outputs and the resolved config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Train and test one model per λ, or run an input ablation.
    Sweep {
        /// Labeled training corpus.
        #[arg(long)]
        train: Option<PathBuf>,
        /// Labeled dev corpus for model selection.
        #[arg(long)]
        dev: Option<PathBuf>,
        /// Labeled test corpus.
        #[arg(long)]
        test: Option<PathBuf>,
        /// Comma-separated λ values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        lambdas: Option<Vec<f64>>,
        /// Toggle one kind of label information in the input instead.
        #[arg(long, value_enum)]
        ablation: Option<AblationArg>,
        /// Maximum training epochs.
        #[arg(long)]
        epochs: Option<usize>,
        /// Directory for outputs and the resolved config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Intermediate training on a source domain, then target fine-tuning
    /// against training from scratch over several target sizes.
    Transfer {
        /// Source-domain training corpus.
        #[arg(long)]
        source_train: Option<PathBuf>,
        /// Source-domain dev corpus.
        #[arg(long)]
        source_dev: Option<PathBuf>,
        /// Target-domain training pool.
        #[arg(long)]
        target_train: Option<PathBuf>,
        /// Target-domain dev corpus.
        #[arg(long)]
        target_dev: Option<PathBuf>,
        /// Target-domain test corpus.
        #[arg(long)]
        target_test: Option<PathBuf>,
        /// Comma-separated target document counts, ascending.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        sizes: Option<Vec<usize>>,
        /// Maximum training epochs.
        #[arg(long)]
        epochs: Option<usize>,
        /// Directory for outputs and the resolved config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Score a checkpoint on a labeled corpus.
    Evaluate {
        /// Checkpoint directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Input corpus (JSONL).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Directory for outputs and the resolved config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Restore casing and punctuation of plain text, one document per line.
    Predict {
        /// Checkpoint directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Input text file; stdin when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output text file; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AblationArg {
    /// Casing in the input, punctuation task.
    CasingInput,
    /// Punctuation in the input, casing task.
    PunctInput,
}

impl From<AblationArg> for AblationTarget {
    fn from(a: AblationArg) -> Self {
        match a {
            AblationArg::CasingInput => AblationTarget::CasingInput,
            AblationArg::PunctInput => AblationTarget::PunctInput,
        }
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Prepare { .. } => "prepare",
            Command::Stats { .. } => "stats",
            Command::Train { .. } => "train",
            Command::Sweep { .. } => "sweep",
            Command::Transfer { .. } => "transfer",
            Command::Evaluate { .. } => "evaluate",
            Command::Predict { .. } => "predict",
        }
    }
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

/// Loads the configuration and folds the subcommand flags into it, so the
/// resolved copy records exactly what ran.
fn resolve(global: &GlobalArgs, command: Command) -> Result<(RunConfig, Command), CliError> {
    let mut cfg = RunConfig::load(global.config.as_deref(), &global.overrides, global.seed)?;
    let p = &mut cfg.paths;
    match &command {
        Command::Prepare { input, out_dir } | Command::Stats { input, out_dir } => {
            set(&mut p.input, input.clone());
            set(&mut p.out_dir, out_dir.clone());
        }
        Command::Train { train, dev, init, lambda, epochs, out_dir } => {
            set(&mut p.train, train.clone());
            set(&mut p.dev, dev.clone());
            set(&mut p.init, init.clone());
            set(&mut p.out_dir, out_dir.clone());
            cfg.train.lambda = lambda.unwrap_or(cfg.train.lambda);
            cfg.train.max_epochs = epochs.unwrap_or(cfg.train.max_epochs);
        }
        Command::Sweep { train, dev, test, lambdas, ablation, epochs, out_dir } => {
            set(&mut p.train, train.clone());
            set(&mut p.dev, dev.clone());
            set(&mut p.test, test.clone());
            set(&mut p.out_dir, out_dir.clone());
            if let Some(l) = lambdas {
                cfg.sweep.lambdas = l.clone();
            }
            if let Some(a) = ablation {
                cfg.sweep.ablation = Some((*a).into());
            }
            cfg.train.max_epochs = epochs.unwrap_or(cfg.train.max_epochs);
        }
        Command::Transfer { source_train, source_dev, target_train, target_dev, target_test, sizes, epochs, out_dir } => {
            set(&mut p.source_train, source_train.clone());
            set(&mut p.source_dev, source_dev.clone());
            set(&mut p.target_train, target_train.clone());
            set(&mut p.target_dev, target_dev.clone());
            set(&mut p.target_test, target_test.clone());
            set(&mut p.out_dir, out_dir.clone());
            if let Some(s) = sizes {
                cfg.transfer.sizes = s.clone();
            }
            cfg.train.max_epochs = epochs.unwrap_or(cfg.train.max_epochs);
        }
        Command::Evaluate { checkpoint, input, out_dir } => {
            set(&mut p.checkpoint, checkpoint.clone());
            set(&mut p.input, input.clone());
            set(&mut p.out_dir, out_dir.clone());
        }
        Command::Predict { checkpoint, input, .. } => {
            set(&mut p.checkpoint, checkpoint.clone());
            set(&mut p.input, input.clone());
        }
    }
    Ok((cfg, command))
}

fn run(global: &GlobalArgs, command: Command) -> Result<(), CliError> {
    let (cfg, command) = resolve(global, command)?;
    match command {
        Command::Prepare { .. } => commands::prepare(&cfg),
        Command::Stats { .. } => commands::stats(&cfg),
        Command::Train { .. } => commands::train(&cfg),
        Command::Sweep { .. } => commands::sweep(&cfg),
        Command::Transfer { .. } => commands::transfer(&cfg),
        Command::Evaluate { .. } => commands::evaluate(&cfg),
        Command::Predict { output, .. } => commands::predict_text(&cfg, output.as_deref()),
    }
}

/// JSON-lines logger on stderr. Messages that are themselves JSON objects
/// are merged into the record.
fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RECASE_LOG", "info"))
        .format(|buf, record| {
            let mut line = json!({
                "level": record.level().as_str().to_lowercase(),
                "target": record.target(),
            });
            let message = record.args().to_string();
            match serde_json::from_str::<serde_json::Value>(&message) {
                Ok(serde_json::Value::Object(fields)) => {
                    for (k, v) in fields {
                        line[k] = v;
                    }
                }
                _ => line["message"] = message.into(),
            }
            writeln!(buf, "{line}")
        })
        .target(env_logger::Target::Stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            eprintln!("{}", CliError::usage(e.kind().to_string()).record("recase"));
            return ExitCode::from(1);
        }
    };
    init_logging();
    let name = cli.command.name();
    match run(&cli.global, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record(name));
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
