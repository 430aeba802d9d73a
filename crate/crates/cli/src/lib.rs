//! `judgekit`: command-line workflows for detecting LLM-generated
//! judgment groups. Every command writes its outputs plus a manifest
//! recording inputs, hashes, and seeds, so runs are reproducible.

pub mod commands;
pub mod manifest;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use thiserror::Error;

/// Errors carry their exit-code category: 2 for bad input, 3 for
/// provider trouble, 4 for internal failures.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Provider(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Provider(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn input(e: impl std::fmt::Display) -> CliError {
        CliError::Input(e.to_string())
    }

    pub fn internal(e: impl std::fmt::Display) -> CliError {
        CliError::Internal(e.to_string())
    }
}

impl From<judgekit_core::data::DataError> for CliError {
    fn from(e: judgekit_core::data::DataError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<judgekit_core::llm::LlmError> for CliError {
    fn from(e: judgekit_core::llm::LlmError) -> Self {
        CliError::Provider(e.to_string())
    }
}

impl From<judgekit_core::extract::ExtractError> for CliError {
    fn from(e: judgekit_core::extract::ExtractError) -> Self {
        use judgekit_core::extract::ExtractError as E;
        match e {
            E::Llm(inner) => CliError::Provider(inner.to_string()),
            E::MissingLlmSource(_) | E::Linguistic(_) => CliError::Input(e.to_string()),
            E::Feature(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<judgekit_core::features::FeatureError> for CliError {
    fn from(e: judgekit_core::features::FeatureError) -> Self {
        use judgekit_core::features::FeatureError as F;
        match e {
            F::BadMatrix { .. } | F::Io { .. } | F::TooFewRows(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<judgekit_core::classifier::ModelError> for CliError {
    fn from(e: judgekit_core::classifier::ModelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<judgekit_core::pipeline::PipelineError> for CliError {
    fn from(e: judgekit_core::pipeline::PipelineError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<judgekit_core::theory::TheoryError> for CliError {
    fn from(e: judgekit_core::theory::TheoryError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<judgekit_core::sweep::SweepError> for CliError {
    fn from(e: judgekit_core::sweep::SweepError) -> Self {
        use judgekit_core::sweep::SweepError as S;
        match e {
            S::Extract(inner) => inner.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OfflineMode {
    /// A cache miss is a hard error.
    Strict,
    /// A cache miss yields zeros with the validity indicator off.
    Lenient,
}

#[derive(Debug, Parser)]
#[command(
    name = "judgekit",
    version,
    about = "Detect whether groups of evaluation judgments were produced by a human or an LLM"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the instance feature matrix from a dataset.
    Extract(commands::extract::ExtractArgs),
    /// Train a classifier on a feature matrix.
    Train(commands::train::TrainArgs),
    /// Score judgment groups with a trained model.
    Detect(commands::detect::DetectArgs),
    /// Train/evaluate over repeated seeds and report F1 and AUROC.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Report the most influential features of a trained model.
    Bias(commands::bias::BiasArgs),
    /// Run a detectability sweep grid end to end and fit beta.
    Theory(commands::study::TheoryArgs),
    /// Generate a synthetic labeled corpus.
    Synth(commands::study::SynthArgs),
    /// Inspect or move the judge-feature cache.
    Cache(commands::cache_ops::CacheArgs),
}

/// Execute a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let argv: Vec<String> = std::env::args().collect();
    match cli.command {
        Command::Extract(args) => commands::extract::run(args, argv),
        Command::Train(args) => commands::train::run(args, argv),
        Command::Detect(args) => commands::detect::run(args, argv),
        Command::Evaluate(args) => commands::evaluate::run(args, argv),
        Command::Bias(args) => commands::bias::run(args, argv),
        Command::Theory(args) => commands::study::run_theory(args, argv),
        Command::Synth(args) => commands::study::run_synth(args, argv),
        Command::Cache(args) => commands::cache_ops::run(args),
    }
}

pub(crate) fn ensure_out_dir(out: &PathBuf) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", out.display())))
}

pub(crate) fn read_config_file(path: &PathBuf) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
