//! Model persistence as versioned canonical JSON.
//!
//! Serialization goes through `serde_json::Value`, whose map is ordered,
//! so keys come out sorted and identical models produce identical bytes.

use super::{ModelError, ModelParams, TrainConfig, TrainedModel};
use crate::features::{FeatureSchema, Standardizer};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    schema: FeatureSchema,
    schema_hash: String,
    standardize: bool,
    standardizer: Standardizer,
    config: TrainConfig,
    params: ModelParams,
}

/// Write the model; identical models produce identical bytes.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), ModelError> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        schema: (*model.schema).clone(),
        schema_hash: model.schema_hash.clone(),
        standardize: model.standardize,
        standardizer: model.standardizer.clone(),
        config: model.config.clone(),
        params: model.params.clone(),
    };
    let value = serde_json::to_value(&file).expect("model serializes");
    let body = serde_json::to_string_pretty(&value).expect("model canonicalizes");
    std::fs::write(path, body + "\n").map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load and verify a model file: the format version must be supported
/// and the embedded schema must hash to the stored schema hash.
pub fn load_model(path: &Path) -> Result<TrainedModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let bad = |message: String| ModelError::BadFile {
        path: path.display().to_string(),
        message,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| bad("missing format_version".into()))? as u32;
    if found > MODEL_FORMAT_VERSION {
        return Err(ModelError::Version {
            found,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
    if file.schema.hash() != file.schema_hash {
        return Err(ModelError::Tampered);
    }
    Ok(TrainedModel {
        schema: Arc::new(file.schema),
        schema_hash: file.schema_hash,
        standardizer: file.standardizer,
        standardize: file.standardize,
        params: file.params,
        config: file.config,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::matrix_from;
    use super::super::{train, TrainConfig};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trained() -> (TrainedModel, crate::features::FeatureMatrix) {
        let rows: Vec<(Vec<f64>, u8)> = (0..40)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                (
                    vec![sign * (1.0 + (i % 7) as f64), (i % 3) as f64],
                    u8::from(i % 2 == 0),
                )
            })
            .collect();
        let matrix = matrix_from(2, rows);
        let model = train(&matrix, &TrainConfig::forest(13)).unwrap();
        (model, matrix)
    }

    #[test]
    fn round_trip_reproduces_predictions_bit_exactly() {
        let (model, matrix) = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..100 {
            let v = crate::features::FeatureVector {
                schema: std::sync::Arc::clone(&matrix.schema),
                values: vec![rng.random_range(-8.0..8.0), rng.random_range(-4.0..4.0)],
                present: vec![true, true],
            };
            let a = model.predict_logit(&v).unwrap();
            let b = loaded.predict_logit(&v).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn saving_twice_is_byte_identical() {
        let (model, _) = trained();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        save_model(&model, &a).unwrap();
        save_model(&model, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn future_version_is_refused() {
        let (model, _) = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 99");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(ModelError::Version { found: 99, .. })
        ));
    }

    #[test]
    fn tampered_schema_hash_is_refused() {
        let (model, _) = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("base.d0", "base.dX");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(load_model(&path), Err(ModelError::Tampered)));
    }
}
