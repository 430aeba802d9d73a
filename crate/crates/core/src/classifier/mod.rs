//! Lightweight binary classifiers emitting instance logits: an
//! interpretable L2-logistic model and a bagged tree ensemble.

mod forest;
mod logistic;
mod store;

pub use forest::{train_forest, FeatureSubsample, ForestParams, ForestSettings, Node, Tree};
pub use logistic::{logistic_gradient, logistic_loss, train_logistic, LogisticParams};
pub use store::{load_model, save_model, MODEL_FORMAT_VERSION};

use crate::features::{
    Block, FeatureError, FeatureMatrix, FeatureSchema, FeatureVector, Standardizer,
};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training needs at least one example of each class")]
    SingleClass,
    #[error("non-finite feature value at row {row}, feature {feature}")]
    NonFinite { row: usize, feature: usize },
    #[error("row {0} has no label")]
    UnlabeledRow(usize),
    #[error("feature schema does not match the model's schema")]
    SchemaMismatch,
    #[error("model file version {found} is newer than supported version {supported}")]
    Version { found: u32, supported: u32 },
    #[error("model file schema hash does not match its schema; refusing to apply")]
    Tampered,
    #[error("bad training config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("model file {path}: {message}")]
    BadFile { path: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Forest,
}

fn default_lr() -> f64 {
    0.1
}
fn default_epochs() -> usize {
    500
}
fn default_l2() -> f64 {
    1e-3
}
fn default_trees() -> usize {
    200
}
fn default_depth() -> usize {
    8
}
fn default_min_leaf() -> usize {
    2
}
fn default_feature_subsample() -> FeatureSubsample {
    FeatureSubsample::Sqrt
}
fn default_row_subsample() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_l2")]
    pub l2_lambda: f64,
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    #[serde(default = "default_depth")]
    pub max_depth: usize,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
    #[serde(default = "default_feature_subsample")]
    pub feature_subsample: FeatureSubsample,
    #[serde(default = "default_row_subsample")]
    pub row_subsample: f64,
    /// Standardize features before the model. Defaults per kind: always
    /// for logistic (coefficients must be comparable), off for trees
    /// (splits are scale-invariant).
    #[serde(default)]
    pub standardize: Option<bool>,
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    pub fn logistic(seed: u64) -> TrainConfig {
        TrainConfig {
            kind: ModelKind::Logistic,
            seed,
            ..TrainConfig::defaults(ModelKind::Logistic)
        }
    }

    pub fn forest(seed: u64) -> TrainConfig {
        TrainConfig {
            kind: ModelKind::Forest,
            seed,
            ..TrainConfig::defaults(ModelKind::Forest)
        }
    }

    fn defaults(kind: ModelKind) -> TrainConfig {
        TrainConfig {
            kind,
            learning_rate: default_lr(),
            epochs: default_epochs(),
            l2_lambda: default_l2(),
            n_trees: default_trees(),
            max_depth: default_depth(),
            min_leaf: default_min_leaf(),
            feature_subsample: default_feature_subsample(),
            row_subsample: default_row_subsample(),
            standardize: None,
            seed: 0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn effective_standardize(&self) -> bool {
        self.standardize
            .unwrap_or(matches!(self.kind, ModelKind::Logistic))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::BadConfig(m.to_string()));
        if self.learning_rate <= 0.0 {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 || self.n_trees == 0 || self.max_depth == 0 || self.min_leaf == 0 {
            return bad("epochs, n_trees, max_depth, and min_leaf must be positive");
        }
        if self.l2_lambda < 0.0 {
            return bad("l2_lambda must be non-negative");
        }
        if !(self.row_subsample > 0.0 && self.row_subsample <= 1.0) {
            return bad("row_subsample must lie in (0, 1]");
        }
        if let FeatureSubsample::Fraction(f) = self.feature_subsample {
            if !(f > 0.0 && f <= 1.0) {
                return bad("feature_subsample fraction must lie in (0, 1]");
            }
        }
        if matches!(self.kind, ModelKind::Logistic) && self.standardize == Some(false) {
            return bad("logistic models require standardized features");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Logistic(LogisticParams),
    Forest(ForestParams),
}

/// A trained classifier bound to its schema and standardization
/// statistics; immutable after training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub schema: Arc<FeatureSchema>,
    pub schema_hash: String,
    pub standardizer: Standardizer,
    pub standardize: bool,
    pub params: ModelParams,
    pub config: TrainConfig,
}

/// Train on the labeled rows of a feature matrix.
pub fn train(matrix: &FeatureMatrix, cfg: &TrainConfig) -> Result<TrainedModel, ModelError> {
    cfg.validate()?;
    let vectors = matrix.vectors();
    if let Some(i) = matrix.rows.iter().position(|r| r.label.is_none()) {
        return Err(ModelError::UnlabeledRow(i));
    }
    let labels: Vec<u8> = matrix.rows.iter().map(|r| r.label.unwrap()).collect();
    let standardizer = Standardizer::fit(&vectors)?;
    let standardize = cfg.effective_standardize();
    let prepared: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let out = if standardize {
                standardizer.apply(v)
            } else {
                standardizer.impute(v)
            };
            out.map(|fv| fv.values)
        })
        .collect::<Result<_, _>>()?;
    let params = match cfg.kind {
        ModelKind::Logistic => ModelParams::Logistic(train_logistic(
            &prepared,
            &labels,
            cfg.learning_rate,
            cfg.epochs,
            cfg.l2_lambda,
        )?),
        ModelKind::Forest => {
            let settings = ForestSettings {
                n_trees: cfg.n_trees,
                max_depth: cfg.max_depth,
                min_leaf: cfg.min_leaf,
                feature_subsample: cfg.feature_subsample,
                row_subsample: cfg.row_subsample,
                seed: cfg.seed,
            };
            ModelParams::Forest(train_forest(&prepared, &labels, &settings)?)
        }
    };
    Ok(TrainedModel {
        schema: Arc::clone(&matrix.schema),
        schema_hash: matrix.schema.hash(),
        standardizer,
        standardize,
        params,
        config: cfg.clone(),
    })
}

impl TrainedModel {
    fn check_schema(&self, schema: &FeatureSchema) -> Result<(), ModelError> {
        if std::ptr::eq(schema, self.schema.as_ref()) || schema.hash() == self.schema_hash {
            Ok(())
        } else {
            Err(ModelError::SchemaMismatch)
        }
    }

    fn prepare(&self, vector: &FeatureVector) -> Result<Vec<f64>, ModelError> {
        let out = if self.standardize {
            self.standardizer.apply(vector)?
        } else {
            self.standardizer.impute(vector)?
        };
        Ok(out.values)
    }

    /// Instance logit; the sigmoid is applied only where a probability is
    /// actually demanded.
    pub fn predict_logit(&self, vector: &FeatureVector) -> Result<f64, ModelError> {
        self.check_schema(&vector.schema)?;
        let row = self.prepare(vector)?;
        Ok(match &self.params {
            ModelParams::Logistic(p) => p.predict_logit(&row),
            ModelParams::Forest(p) => p.predict_logit(&row),
        })
    }

    /// Logits for every row of a matrix, checking the schema once.
    pub fn predict_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>, ModelError> {
        self.check_schema(&matrix.schema)?;
        (0..matrix.rows.len())
            .map(|i| {
                let row = self.prepare(&matrix.vector(i))?;
                Ok(match &self.params {
                    ModelParams::Logistic(p) => p.predict_logit(&row),
                    ModelParams::Forest(p) => p.predict_logit(&row),
                })
            })
            .collect()
    }

    /// Unsigned importance per feature: |coefficient| for the logistic
    /// model, normalized Gini decrease for the ensemble.
    pub fn importance_values(&self) -> Vec<f64> {
        match &self.params {
            ModelParams::Logistic(p) => p.weights.iter().map(|w| w.abs()).collect(),
            ModelParams::Forest(p) => p.importance.clone(),
        }
    }

    /// Signed per-feature value for reporting: the raw coefficient for
    /// the logistic model (sign carries direction), importance otherwise.
    pub fn signed_values(&self) -> Vec<f64> {
        match &self.params {
            ModelParams::Logistic(p) => p.weights.clone(),
            ModelParams::Forest(p) => p.importance.clone(),
        }
    }

    /// Features ranked by importance, descending; ties break by schema
    /// order.
    pub fn feature_importance(&self) -> Vec<(String, f64)> {
        let values = self.importance_values();
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| {
            values[b]
                .partial_cmp(&values[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        order
            .into_iter()
            .map(|i| (self.schema.entries[i].name.clone(), values[i]))
            .collect()
    }

    pub fn block_of(&self, name: &str) -> Option<Block> {
        self.schema
            .entries
            .iter()
            .find(|e| e.name == name)
            .map(|e| e.block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{build_schema, Ablation, MatrixRow};
    use crate::data::JudgmentType;

    pub(crate) fn matrix_from(
        names: usize,
        rows: Vec<(Vec<f64>, u8)>,
    ) -> FeatureMatrix {
        let dims: Vec<String> = (0..names).map(|i| format!("d{i}")).collect();
        let schema = build_schema(
            JudgmentType::Pointwise,
            &dims,
            0,
            Ablation::BaseOnly,
            vec![],
        );
        FeatureMatrix {
            schema,
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (values, label))| MatrixRow {
                    present: vec![true; values.len()],
                    values,
                    group_id: format!("g{i}"),
                    label: Some(label),
                })
                .collect(),
        }
    }

    fn two_class_matrix() -> FeatureMatrix {
        let rows: Vec<(Vec<f64>, u8)> = (0..30)
            .map(|i| {
                let offset = if i % 2 == 0 { 2.0 } else { -2.0 };
                (
                    vec![offset + (i as f64) * 0.01, (i % 5) as f64],
                    u8::from(i % 2 == 0),
                )
            })
            .collect();
        matrix_from(2, rows)
    }

    #[test]
    fn predict_logit_is_dot_product_plus_bias() {
        let matrix = two_class_matrix();
        let mut model = train(&matrix, &TrainConfig::logistic(1)).unwrap();
        model.params = ModelParams::Logistic(LogisticParams {
            weights: vec![1.0, -1.0],
            bias: 0.5,
            l2_lambda: 0.0,
        });
        // bypass standardization to check the raw arithmetic
        model.standardize = false;
        let v = FeatureVector {
            schema: Arc::clone(&matrix.schema),
            values: vec![2.0, 1.0],
            present: vec![true, true],
        };
        assert_eq!(model.predict_logit(&v).unwrap(), 1.5);
    }

    #[test]
    fn zero_weights_predict_zero_everywhere() {
        let matrix = two_class_matrix();
        let mut model = train(&matrix, &TrainConfig::logistic(1)).unwrap();
        model.params = ModelParams::Logistic(LogisticParams {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            l2_lambda: 0.0,
        });
        for i in 0..matrix.rows.len() {
            assert_eq!(model.predict_logit(&matrix.vector(i)).unwrap(), 0.0);
        }
        // tie-break on all-equal importances follows schema order
        let ranked = model.feature_importance();
        assert_eq!(ranked[0].0, "base.d0");
        assert_eq!(ranked[1].0, "base.d1");
    }

    #[test]
    fn importance_sorts_by_absolute_weight() {
        let matrix = two_class_matrix();
        let mut model = train(&matrix, &TrainConfig::logistic(1)).unwrap();
        model.params = ModelParams::Logistic(LogisticParams {
            weights: vec![0.1, -2.0],
            bias: 0.0,
            l2_lambda: 0.0,
        });
        let ranked = model.feature_importance();
        assert_eq!(ranked[0], ("base.d1".to_string(), 2.0));
        assert_eq!(ranked[1], ("base.d0".to_string(), 0.1));
    }

    #[test]
    fn ensemble_mean_of_leaf_values() {
        let forest = ForestParams {
            trees: vec![
                Tree {
                    nodes: vec![Node::Leaf { value: 0.4 }],
                },
                Tree {
                    nodes: vec![Node::Leaf { value: -0.2 }],
                },
            ],
            importance: vec![1.0],
        };
        assert!((forest.predict_logit(&[0.0]) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn unlabeled_rows_are_rejected() {
        let mut matrix = two_class_matrix();
        matrix.rows[3].label = None;
        assert!(matches!(
            train(&matrix, &TrainConfig::logistic(1)),
            Err(ModelError::UnlabeledRow(3))
        ));
    }

    #[test]
    fn schema_mismatch_is_refused() {
        let matrix = two_class_matrix();
        let model = train(&matrix, &TrainConfig::logistic(1)).unwrap();
        let other = matrix_from(3, vec![(vec![0.0, 0.0, 0.0], 0), (vec![1.0, 1.0, 1.0], 1)]);
        assert!(matches!(
            model.predict_matrix(&other),
            Err(ModelError::SchemaMismatch)
        ));
    }

    #[test]
    fn logistic_decisions_survive_affine_transform_with_refit() {
        let matrix = two_class_matrix();
        let cfg = TrainConfig::logistic(5);
        let model = train(&matrix, &cfg).unwrap();
        let mut transformed = matrix.clone();
        for row in &mut transformed.rows {
            row.values[0] = 3.0 * row.values[0] + 7.0;
            row.values[1] = 0.5 * row.values[1] - 2.0;
        }
        let refit = train(&transformed, &cfg).unwrap();
        let a = model.predict_matrix(&matrix).unwrap();
        let b = refit.predict_matrix(&transformed).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(*x >= 0.0, *y >= 0.0);
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut cfg = TrainConfig::logistic(0);
        cfg.learning_rate = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::forest(0);
        cfg.row_subsample = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::logistic(0);
        cfg.standardize = Some(false);
        assert!(cfg.validate().is_err());
    }
}
