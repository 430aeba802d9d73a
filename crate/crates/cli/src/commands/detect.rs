//! `judgekit detect`: score judgment groups with a trained model.

use crate::manifest::RunManifest;
use crate::{ensure_out_dir, CliError, OfflineMode};
use clap::Args;
use judgekit_core::classifier::load_model;
use judgekit_core::data::{load_dataset, ScaleSpec};
use judgekit_core::extract::{extract_matrix, LlmSource};
use judgekit_core::features::{Ablation, Block, FeatureMatrix, FeatureSchema};
use judgekit_core::llm::{FeatureCache, HttpProvider, ProviderConfig};
use judgekit_core::pipeline::score_groups;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Trained model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Pre-extracted feature matrix to score.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Dataset JSONL to extract and score (needs --scale).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub scale: Option<PathBuf>,
    #[arg(long)]
    pub provider_config: Option<PathBuf>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub offline: Option<OfflineMode>,
    #[arg(long)]
    pub strict: bool,
    /// Decision threshold on the aggregated logit.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tau: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// The ablation a schema was built under, read off its block layout.
fn ablation_of(schema: &FeatureSchema) -> Ablation {
    match (
        schema.block_len(Block::Llm) > 0,
        schema.block_len(Block::Linguistic) > 0,
    ) {
        (true, true) => Ablation::Full,
        (true, false) => Ablation::BaseLlm,
        (false, true) => Ablation::BaseLing,
        (false, false) => Ablation::BaseOnly,
    }
}

#[derive(Serialize)]
struct DetectSummary {
    n_groups: usize,
    predicted_llm: usize,
    predicted_human: usize,
    tau: f64,
}

pub fn run(args: DetectArgs, argv: Vec<String>) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let mut manifest = RunManifest::new(argv);
    manifest.hash_input(&args.model).map_err(CliError::internal)?;

    let matrix = match (&args.matrix, &args.dataset) {
        (Some(path), None) => {
            manifest.hash_input(path).map_err(CliError::internal)?;
            FeatureMatrix::load(path)?
        }
        (None, Some(dataset_path)) => {
            let scale_path = args
                .scale
                .as_ref()
                .ok_or_else(|| CliError::input("--dataset needs --scale"))?;
            manifest.hash_input(dataset_path).map_err(CliError::internal)?;
            manifest.hash_input(scale_path).map_err(CliError::internal)?;
            let scale = ScaleSpec::load(scale_path)?;
            let dataset = load_dataset(dataset_path, scale)?;
            let ablation = ablation_of(&model.schema);
            let mut provider_cfg = ProviderConfig::default();
            if let Some(path) = &args.provider_config {
                let bytes = crate::read_config_file(path)?;
                provider_cfg = serde_json::from_slice(&bytes)
                    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                manifest.set_config_bytes(&bytes);
            }
            let cache = match &args.cache {
                Some(path) => FeatureCache::open(path)?,
                None => FeatureCache::in_memory(),
            };
            if !ablation.has_llm() {
                extract_matrix(&dataset, ablation, &LlmSource::None)?
            } else if args.offline.is_some() || args.provider_config.is_none() {
                let strict = matches!(args.offline, Some(OfflineMode::Strict));
                extract_matrix(
                    &dataset,
                    ablation,
                    &LlmSource::Offline {
                        config: &provider_cfg,
                        cache: &cache,
                        strict,
                    },
                )?
            } else {
                let provider = HttpProvider::new(provider_cfg.clone());
                let matrix = extract_matrix(
                    &dataset,
                    ablation,
                    &LlmSource::Online {
                        config: &provider_cfg,
                        provider: &provider,
                        cache: &cache,
                        strict: args.strict,
                    },
                )?;
                cache.save()?;
                matrix
            }
        }
        _ => {
            return Err(CliError::input(
                "provide exactly one of --matrix or --dataset",
            ))
        }
    };

    let groups = score_groups(&model, &matrix, args.tau)?;
    ensure_out_dir(&args.out)?;
    let scores_path = args.out.join("group_scores.csv");
    let mut writer = csv::Writer::from_path(&scores_path)
        .map_err(|e| CliError::internal(format!("{}: {e}", scores_path.display())))?;
    writer
        .write_record(["group_id", "k", "aggregate", "prediction", "true_label", "logits"])
        .map_err(CliError::internal)?;
    for group in &groups {
        let logits = group
            .instance_logits
            .iter()
            .map(|z| judgekit_core::features::fmt_sig9(*z))
            .collect::<Vec<_>>()
            .join(";");
        writer
            .write_record([
                group.group_id.clone(),
                group.instance_logits.len().to_string(),
                judgekit_core::features::fmt_sig9(group.aggregate),
                group.prediction.to_string(),
                match group.true_label {
                    Some(1) => "llm".into(),
                    Some(_) => "human".into(),
                    None => String::new(),
                },
                logits,
            ])
            .map_err(CliError::internal)?;
    }
    writer.flush().map_err(CliError::internal)?;

    let summary = DetectSummary {
        n_groups: groups.len(),
        predicted_llm: groups.iter().filter(|g| g.prediction == 1).count(),
        predicted_human: groups.iter().filter(|g| g.prediction == 0).count(),
        tau: args.tau,
    };
    let summary_body = serde_json::to_string_pretty(
        &serde_json::to_value(&summary).expect("summary serializes"),
    )
    .expect("summary canonicalizes");
    std::fs::write(args.out.join("summary.json"), summary_body + "\n")
        .map_err(CliError::internal)?;
    manifest.write(&args.out).map_err(CliError::internal)?;
    println!(
        "scored {} groups at tau={}: {} llm, {} human",
        summary.n_groups, summary.tau, summary.predicted_llm, summary.predicted_human
    );
    Ok(())
}
