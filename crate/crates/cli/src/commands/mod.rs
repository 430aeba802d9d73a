pub mod bias;
pub mod cache_ops;
pub mod detect;
pub mod evaluate;
pub mod extract;
pub mod study;
pub mod train;

use crate::CliError;
use judgekit_core::classifier::TrainConfig;
use std::path::PathBuf;

/// Resolve a training config from `--config` (JSON file) or `--kind`,
/// with an optional seed override.
pub(crate) fn resolve_train_config(
    config: &Option<PathBuf>,
    kind: &Option<String>,
    seed: Option<u64>,
) -> Result<(TrainConfig, Option<Vec<u8>>), CliError> {
    let (mut cfg, bytes) = match (config, kind) {
        (Some(path), _) => {
            let bytes = crate::read_config_file(path)?;
            let cfg: TrainConfig = serde_json::from_slice(&bytes)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            (cfg, Some(bytes))
        }
        (None, Some(kind)) => match kind.as_str() {
            "logistic" => (TrainConfig::logistic(0), None),
            "forest" => (TrainConfig::forest(0), None),
            other => {
                return Err(CliError::input(format!(
                    "unknown model kind {other}; expected logistic|forest"
                )))
            }
        },
        (None, None) => {
            return Err(CliError::input(
                "provide --config <train.json> or --kind logistic|forest",
            ))
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(CliError::input)?;
    Ok((cfg, bytes))
}

/// Expand `--repeats`/`--seeds` into the seed list (they must agree).
pub(crate) fn resolve_seeds(
    repeats: Option<usize>,
    seeds: &[u64],
    fallback: u64,
) -> Result<Vec<u64>, CliError> {
    match (repeats, seeds.is_empty()) {
        (None, true) => Ok(vec![fallback]),
        (None, false) => Ok(seeds.to_vec()),
        (Some(r), true) => Ok((1..=r as u64).collect()),
        (Some(r), false) => {
            if r != seeds.len() {
                Err(CliError::input(format!(
                    "--repeats {r} does not match {} seeds",
                    seeds.len()
                )))
            } else {
                Ok(seeds.to_vec())
            }
        }
    }
}
