//! `judgekit train`: feature matrix -> model file.

use crate::manifest::RunManifest;
use crate::{ensure_out_dir, CliError};
use clap::Args;
use judgekit_core::classifier::{save_model, train};
use judgekit_core::features::FeatureMatrix;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Feature matrix CSV from `extract`.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Training config JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Shortcut for the default config of a model kind.
    #[arg(long)]
    pub kind: Option<String>,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: TrainArgs, argv: Vec<String>) -> Result<(), CliError> {
    let (cfg, cfg_bytes) = super::resolve_train_config(&args.config, &args.kind, args.seed)?;
    let matrix = FeatureMatrix::load(&args.matrix)?;
    ensure_out_dir(&args.out)?;
    let model = train(&matrix, &cfg)?;
    let model_path = args.out.join("model.json");
    save_model(&model, &model_path)?;

    let mut manifest = RunManifest::new(argv);
    manifest.hash_input(&args.matrix).map_err(CliError::internal)?;
    if let Some(bytes) = cfg_bytes {
        manifest.set_config_bytes(&bytes);
    }
    manifest.seeds = vec![cfg.seed];
    manifest.write(&args.out).map_err(CliError::internal)?;

    println!(
        "trained {:?} model on {} instances -> {}",
        cfg.kind,
        matrix.rows.len(),
        model_path.display()
    );
    Ok(())
}
