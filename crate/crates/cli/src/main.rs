//! `biotwin`: generate synthetic muscle-ring corpora, train the static and
//! dynamic force models, evaluate them and produce forecasts. Every run writes
//! `run_manifest.json`; `biotwin replay` re-executes one.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{CorpusFlags, DynamicFlags, StaticFlags};
use crate::manifest::{Invocation, RunManifest};

/// Error reported as `error[category]: message` on stderr.
#[derive(Debug)]
pub struct Failure {
    pub category: &'static str,
    pub message: String,
}

impl Failure {
    pub fn new(category: &'static str, message: impl Into<String>) -> Self {
        Failure { category, message: message.into() }
    }
}

impl From<biotwin::Error> for Failure {
    fn from(e: biotwin::Error) -> Self {
        let category = match &e {
            biotwin::Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => "missing-file",
            _ => e.category(),
        };
        Failure::new(category, e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "biotwin", version, about = "Digital twin toolkit for electrically stimulated muscle rings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a corpus of force traces.
    Generate {
        #[command(flatten)]
        corpus: CorpusFlags,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Train a max-force model (rf, nn or nn-baseline) on an 80/20 split.
    TrainStatic {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        flags: StaticFlags,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Train the one-step LSTM forecaster on sliding windows.
    TrainDynamic {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        flags: DynamicFlags,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Score a saved model on every experiment of a corpus.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Forecast a force trace with a saved LSTM.
    Forecast {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// teacher_forced or autoregressive.
        #[arg(long, default_value = "teacher_forced")]
        mode: String,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Re-run the command recorded in a run manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory; the recorded one when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn invocation(command: Command) -> Result<Invocation, Failure> {
    Ok(match command {
        Command::Generate { corpus, out } => Invocation::Generate { spec: config::corpus_spec(&corpus)?, out },
        Command::TrainStatic { corpus, model, config, seed, flags, out } => {
            let model = model.parse().map_err(|e: biotwin::Error| Failure::new("unknown-model", e.to_string()))?;
            let config = config::static_config(config.as_deref(), &flags)?;
            Invocation::TrainStatic { corpus, model, config, seed, out }
        }
        Command::TrainDynamic { corpus, config, seed, flags, out } => {
            let config = config::dynamic_config(config.as_deref(), &flags)?;
            Invocation::TrainDynamic { corpus, config, seed, out }
        }
        Command::Evaluate { model, corpus, out } => Invocation::Evaluate { model, corpus, out },
        Command::Forecast { model, trace, mode, out } => {
            Invocation::Forecast { model, trace, mode: commands::parse_mode(&mode)?, out }
        }
        Command::Replay { manifest, out } => {
            let mut inv = RunManifest::read(&manifest)?.invocation;
            if let Some(out) = out {
                inv.set_out(out);
            }
            inv
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match invocation(cli.command).and_then(commands::execute) {
        Ok(m) => {
            eprintln!("{} finished in {:.1} s; outputs in {}", m.command, m.duration_s, m.invocation.out().display());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error[{}]: {}", f.category, f.message);
            ExitCode::FAILURE
        }
    }
}
