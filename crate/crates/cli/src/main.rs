//! `latent-cause`: staged pipeline from event tables to source-level
//! Shapley explanations, with a synthetic ground-truth harness.

mod config;
mod eval;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;

/// A problem with the user's inputs or configuration (exit code 2).
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

#[derive(Parser)]
#[command(name = "latent-cause", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "artifacts")]
    artifacts: PathBuf,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Parse and validate event and demographics tables; freeze the vocabulary.
    Ingest,
    /// Infer per-patient curves over each record's span.
    Curves,
    /// Sample cross sections into a matrix and standardize it.
    Matrix,
    /// Whiten and run FastICA.
    Ica,
    /// Train the source-space (H_c) and raw-space (H_a) outcome models.
    Train,
    /// Shapley attributions of sources and the source ranking report.
    Explain,
    /// Generate a synthetic corpus and a separate ground-truth bundle.
    Synth,
    /// Score the pipeline against the ground-truth bundle.
    Eval,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use latent_cause::Error as E;
    for cause in e.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::Io(_) | E::Json(_) | E::Shape { .. } => 1,
                _ => 2,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Config::load(cli.config.as_deref(), cli.seed, &cli.artifacts).and_then(|cfg| match cli.command {
        Command::Ingest => stages::ingest(&cfg),
        Command::Curves => stages::curves(&cfg),
        Command::Matrix => stages::matrix(&cfg),
        Command::Ica => stages::ica(&cfg),
        Command::Train => stages::train(&cfg),
        Command::Explain => stages::explain(&cfg),
        Command::Synth => stages::synth(&cfg),
        Command::Eval => eval::eval(&cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
