//! `judgekit theory` and `judgekit synth`: detectability sweeps and
//! synthetic corpus generation.

use crate::manifest::RunManifest;
use crate::{ensure_out_dir, CliError};
use clap::Args;
use judgekit_core::data::save_dataset;
use judgekit_core::features::fmt_sig9;
use judgekit_core::sweep::{run_sweep, SweepConfig};
use judgekit_core::theory::{synth_generate, SynthConfig};
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// Sweep config JSON (synth parameters, group sizes, seeds, model).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_theory(args: TheoryArgs, argv: Vec<String>) -> Result<(), CliError> {
    let bytes = crate::read_config_file(&args.config)?;
    let cfg: SweepConfig = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::input(format!("{}: {e}", args.config.display())))?;
    let rows = run_sweep(&cfg)?;
    ensure_out_dir(&args.out)?;

    let csv_path = args.out.join("sweep.csv");
    let mut writer = csv::Writer::from_path(&csv_path)
        .map_err(|e| CliError::internal(format!("{}: {e}", csv_path.display())))?;
    writer
        .write_record([
            "m",
            "d",
            "s",
            "delta",
            "beta_hat",
            "det_predicted",
            "auroc_observed",
            "f1_observed",
            "seed",
        ])
        .map_err(CliError::internal)?;
    for row in &rows {
        writer
            .write_record([
                row.m.to_string(),
                row.d.to_string(),
                fmt_sig9(row.s),
                fmt_sig9(row.delta),
                fmt_sig9(row.beta_hat),
                fmt_sig9(row.det_predicted),
                fmt_sig9(row.auroc_observed),
                fmt_sig9(row.f1_observed),
                row.seed.to_string(),
            ])
            .map_err(CliError::internal)?;
    }
    writer.flush().map_err(CliError::internal)?;

    let mut manifest = RunManifest::new(argv);
    manifest.set_config_bytes(&bytes);
    manifest.seeds = cfg.seeds.clone();
    manifest.write(&args.out).map_err(CliError::internal)?;

    let beta = rows.first().map(|r| r.beta_hat).unwrap_or(0.0);
    println!(
        "sweep of {} cells written to {} (beta_hat = {:.6})",
        rows.len(),
        csv_path.display(),
        beta
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synth config JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_synth(args: SynthArgs, argv: Vec<String>) -> Result<(), CliError> {
    let bytes = crate::read_config_file(&args.config)?;
    let mut cfg: SynthConfig = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::input(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let dataset = synth_generate(&cfg)?;
    ensure_out_dir(&args.out)?;
    let data_path = args.out.join("dataset.jsonl");
    save_dataset(&dataset, &data_path)?;
    dataset.scale.save(&args.out.join("scale.json"))?;

    let mut manifest = RunManifest::new(argv);
    manifest.set_config_bytes(&bytes);
    manifest.seeds = vec![cfg.seed];
    manifest.write(&args.out).map_err(CliError::internal)?;

    println!(
        "generated {} groups ({} instances) -> {}",
        dataset.groups.len(),
        dataset.instance_count(),
        data_path.display()
    );
    Ok(())
}
