//! `judgekit extract`: dataset -> feature matrix CSV.

use crate::manifest::RunManifest;
use crate::{ensure_out_dir, CliError, OfflineMode};
use clap::Args;
use judgekit_core::data::{load_dataset, ScaleSpec};
use judgekit_core::extract::{extract_matrix, LlmSource};
use judgekit_core::features::Ablation;
use judgekit_core::llm::{FeatureCache, HttpProvider, ProviderConfig};
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Dataset JSONL, one judgment group per line.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Scale spec JSON describing the rating grid.
    #[arg(long)]
    pub scale: PathBuf,
    /// Provider connection JSON; enables live judge-feature calls.
    #[arg(long)]
    pub provider_config: Option<PathBuf>,
    /// Judge-feature cache file (JSONL).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Replay the cache without any network access.
    #[arg(long, value_enum)]
    pub offline: Option<OfflineMode>,
    /// Which feature blocks to build.
    #[arg(long, default_value = "full")]
    pub ablation: Ablation,
    /// Treat provider failures as fatal in online mode.
    #[arg(long)]
    pub strict: bool,
    /// Bound on concurrent provider requests.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: ExtractArgs, argv: Vec<String>) -> Result<(), CliError> {
    let scale = ScaleSpec::load(&args.scale)?;
    let dataset = load_dataset(&args.dataset, scale)?;
    ensure_out_dir(&args.out)?;

    let mut manifest = RunManifest::new(argv);
    manifest
        .hash_input(&args.dataset)
        .and_then(|()| manifest.hash_input(&args.scale))
        .map_err(CliError::internal)?;

    let mut provider_cfg = ProviderConfig::default();
    let mut provider_cfg_bytes = None;
    if let Some(path) = &args.provider_config {
        let bytes = crate::read_config_file(path)?;
        provider_cfg = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        provider_cfg.validate().map_err(CliError::input)?;
        provider_cfg_bytes = Some(bytes);
    }
    if let Some(jobs) = args.jobs {
        provider_cfg.max_concurrent = jobs.max(1);
    }
    if let Some(bytes) = &provider_cfg_bytes {
        manifest.set_config_bytes(bytes);
    }

    let cache = match &args.cache {
        Some(path) => FeatureCache::open(path)?,
        None => FeatureCache::in_memory(),
    };

    let matrix = if !args.ablation.has_llm() {
        extract_matrix(&dataset, args.ablation, &LlmSource::None)?
    } else if args.offline.is_some() || args.provider_config.is_none() {
        // no provider configured also means cache-only
        let strict = matches!(args.offline, Some(OfflineMode::Strict));
        if args.cache.is_none() {
            return Err(CliError::input(
                "offline extraction with llm features needs --cache",
            ));
        }
        extract_matrix(
            &dataset,
            args.ablation,
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
            args.ablation,
            &LlmSource::Online {
                config: &provider_cfg,
                provider: &provider,
                cache: &cache,
                strict: args.strict,
            },
        )?;
        cache.save()?;
        matrix
    };

    let matrix_path = args.out.join("features.csv");
    matrix.save(&matrix_path)?;
    manifest.write(&args.out).map_err(CliError::internal)?;
    println!(
        "extracted {} instances x {} features -> {}",
        matrix.rows.len(),
        matrix.schema.len(),
        matrix_path.display()
    );
    Ok(())
}
