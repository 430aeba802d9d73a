//! `judgekit bias`: rank the features driving the detector's decisions.

use crate::manifest::RunManifest;
use crate::{ensure_out_dir, CliError};
use clap::Args;
use judgekit_core::classifier::load_model;
use judgekit_core::features::{fmt_sig9, Block};
use judgekit_core::pipeline::bias_report;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct BiasArgs {
    /// Trained model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// How many features to report.
    #[arg(long, default_value_t = 20)]
    pub top_n: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn block_name(block: Block) -> &'static str {
    match block {
        Block::Base => "base",
        Block::Llm => "llm",
        Block::Linguistic => "linguistic",
    }
}

pub fn run(args: BiasArgs, argv: Vec<String>) -> Result<(), CliError> {
    if args.top_n == 0 {
        return Err(CliError::input("--top-n must be at least 1"));
    }
    let model = load_model(&args.model)?;
    let report = bias_report(&model, args.top_n);
    if report.clamped {
        eprintln!(
            "warning: requested top {} but the schema has only {} features",
            args.top_n,
            report.entries.len()
        );
    }

    ensure_out_dir(&args.out)?;
    let csv_path = args.out.join("bias.csv");
    let mut writer = csv::Writer::from_path(&csv_path)
        .map_err(|e| CliError::internal(format!("{}: {e}", csv_path.display())))?;
    writer
        .write_record(["rank", "feature", "value", "block"])
        .map_err(CliError::internal)?;
    for (i, entry) in report.entries.iter().enumerate() {
        writer
            .write_record([
                (i + 1).to_string(),
                entry.name.clone(),
                fmt_sig9(entry.value),
                block_name(entry.block).to_string(),
            ])
            .map_err(CliError::internal)?;
    }
    writer.flush().map_err(CliError::internal)?;

    let width = report
        .entries
        .iter()
        .map(|e| e.name.len())
        .max()
        .unwrap_or(8)
        .max(8);
    println!("{:>4}  {:<width$}  {:>12}  block", "rank", "feature", "value");
    for (i, entry) in report.entries.iter().enumerate() {
        println!(
            "{:>4}  {:<width$}  {:>12.5}  {}",
            i + 1,
            entry.name,
            entry.value,
            block_name(entry.block)
        );
    }

    let mut manifest = RunManifest::new(argv);
    manifest.hash_input(&args.model).map_err(CliError::internal)?;
    manifest.write(&args.out).map_err(CliError::internal)?;
    Ok(())
}
