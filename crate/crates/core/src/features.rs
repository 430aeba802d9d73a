//! Feature schema, vectors, standardization, and the on-disk feature
//! matrix. The final instance vector is the concatenation of the base
//! judgment scores, the LLM-derived block, and the linguistic block, in
//! that fixed order.

use crate::data::JudgmentType;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("block {block:?} has {got} values but the schema expects {expected}")]
    BlockMismatch {
        block: Block,
        expected: usize,
        got: usize,
    },
    #[error("vector was built against a different schema")]
    SchemaMismatch,
    #[error("standardizer needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("matrix file {path}: {message}")]
    BadMatrix { path: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Current schema layout version, embedded in model files.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Base,
    Llm,
    Linguistic,
}

/// Which feature blocks to build; `Base` is always present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Full,
    BaseOnly,
    BaseLlm,
    BaseLing,
}

impl Ablation {
    pub fn has_llm(self) -> bool {
        matches!(self, Ablation::Full | Ablation::BaseLlm)
    }

    pub fn has_linguistic(self) -> bool {
        matches!(self, Ablation::Full | Ablation::BaseLing)
    }
}

impl std::str::FromStr for Ablation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Ablation::Full),
            "base_only" => Ok(Ablation::BaseOnly),
            "base_llm" => Ok(Ablation::BaseLlm),
            "base_ling" => Ok(Ablation::BaseLing),
            other => Err(format!(
                "unknown ablation {other}; expected full|base_only|base_llm|base_ling"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub name: String,
    pub block: Block,
}

/// Ordered, named feature layout shared by extraction, training, and
/// inference. Identical schemas hash identically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub entries: Vec<SchemaEntry>,
    pub version: u32,
    pub lexicon_hashes: Vec<String>,
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn block_len(&self, block: Block) -> usize {
        self.entries.iter().filter(|e| e.block == block).count()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    /// Hash of the canonical JSON form; pins a model to its layout.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("schema serializes");
        let canonical = serde_json::to_string(&value).expect("schema canonicalizes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Rebuild a schema from matrix header names; the block of each
    /// feature is carried by its name prefix.
    pub fn from_names(
        names: &[String],
        lexicon_hashes: Vec<String>,
    ) -> Result<FeatureSchema, FeatureError> {
        let mut entries = Vec::with_capacity(names.len());
        for name in names {
            let block = if name.starts_with("base.") {
                Block::Base
            } else if name.starts_with("llm.") {
                Block::Llm
            } else if name.starts_with("ling.") {
                Block::Linguistic
            } else {
                return Err(FeatureError::BadMatrix {
                    path: String::new(),
                    message: format!("feature {name} has no block prefix"),
                });
            };
            entries.push(SchemaEntry {
                name: name.clone(),
                block,
            });
        }
        let schema = FeatureSchema {
            entries,
            version: SCHEMA_VERSION,
            lexicon_hashes,
        };
        schema.check_block_order()?;
        Ok(schema)
    }

    fn check_block_order(&self) -> Result<(), FeatureError> {
        let rank = |b: Block| match b {
            Block::Base => 0,
            Block::Llm => 1,
            Block::Linguistic => 2,
        };
        let mut last = 0;
        let mut seen = std::collections::BTreeSet::new();
        for entry in &self.entries {
            let r = rank(entry.block);
            if r < last {
                return Err(FeatureError::BadMatrix {
                    path: String::new(),
                    message: "blocks out of base, llm, linguistic order".into(),
                });
            }
            last = r;
            if !seen.insert(entry.name.as_str()) {
                return Err(FeatureError::BadMatrix {
                    path: String::new(),
                    message: format!("duplicate feature name {}", entry.name),
                });
            }
        }
        Ok(())
    }
}

/// Base-block feature names for a judgment type.
pub fn base_feature_names(
    ty: JudgmentType,
    dimension_names: &[String],
    k_items: usize,
) -> Vec<String> {
    match ty {
        JudgmentType::Pointwise => dimension_names
            .iter()
            .map(|d| format!("base.{d}"))
            .collect(),
        JudgmentType::Pairwise => vec!["base.pair".to_string()],
        JudgmentType::Listwise => {
            let mut names: Vec<String> = (0..k_items).map(|i| format!("base.item{i}")).collect();
            names.extend((0..k_items).map(|i| format!("base.rank{i}")));
            names
        }
    }
}

/// LLM-block feature names: the three stylistic scores, one aligned score
/// per judgment dimension, the overall score, and the validity indicator.
pub fn llm_feature_names(dimension_names: &[String]) -> Vec<String> {
    let mut names = vec![
        "llm.style".to_string(),
        "llm.format".to_string(),
        "llm.wording".to_string(),
    ];
    names.extend(dimension_names.iter().map(|d| format!("llm.aligned.{d}")));
    names.push("llm.overall".to_string());
    names.push("llm.valid".to_string());
    names
}

/// Build the full schema for a dataset shape under an ablation.
pub fn build_schema(
    ty: JudgmentType,
    dimension_names: &[String],
    k_items: usize,
    ablation: Ablation,
    lexicon_hashes: Vec<String>,
) -> Arc<FeatureSchema> {
    let mut entries = Vec::new();
    for name in base_feature_names(ty, dimension_names, k_items) {
        entries.push(SchemaEntry {
            name,
            block: Block::Base,
        });
    }
    if ablation.has_llm() {
        for name in llm_feature_names(dimension_names) {
            entries.push(SchemaEntry {
                name,
                block: Block::Llm,
            });
        }
    }
    if ablation.has_linguistic() {
        for name in crate::linguistic::feature_names(ty, k_items) {
            entries.push(SchemaEntry {
                name,
                block: Block::Linguistic,
            });
        }
    }
    Arc::new(FeatureSchema {
        entries,
        version: SCHEMA_VERSION,
        lexicon_hashes,
    })
}

/// One feature block: values plus per-value presence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureBlock {
    pub values: Vec<f64>,
    pub present: Vec<bool>,
}

impl FeatureBlock {
    pub fn dense(values: Vec<f64>) -> FeatureBlock {
        let present = vec![true; values.len()];
        FeatureBlock { values, present }
    }
}

/// A schema-aligned feature vector with a presence mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub schema: Arc<FeatureSchema>,
    pub values: Vec<f64>,
    pub present: Vec<bool>,
}

/// Concatenate blocks in base, llm, linguistic order. Block lengths must
/// match the schema exactly; permuted or truncated blocks are an error,
/// never silently reordered.
pub fn assemble(
    schema: &Arc<FeatureSchema>,
    base: FeatureBlock,
    llm: FeatureBlock,
    linguistic: FeatureBlock,
) -> Result<FeatureVector, FeatureError> {
    for (block, part) in [
        (Block::Base, &base),
        (Block::Llm, &llm),
        (Block::Linguistic, &linguistic),
    ] {
        let expected = schema.block_len(block);
        if part.values.len() != expected || part.present.len() != expected {
            return Err(FeatureError::BlockMismatch {
                block,
                expected,
                got: part.values.len(),
            });
        }
    }
    let mut values = base.values;
    values.extend(llm.values);
    values.extend(linguistic.values);
    let mut present = base.present;
    present.extend(llm.present);
    present.extend(linguistic.present);
    Ok(FeatureVector {
        schema: Arc::clone(schema),
        values,
        present,
    })
}

/// Per-feature mean and population standard deviation, fit on training
/// rows over present values only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
}

impl Standardizer {
    /// Fit on at least two rows. Features with zero variance (or with no
    /// present values at all) are flagged constant and standardize to 0.
    pub fn fit(rows: &[FeatureVector]) -> Result<Standardizer, FeatureError> {
        if rows.len() < 2 {
            return Err(FeatureError::TooFewRows(rows.len()));
        }
        let width = rows[0].values.len();
        let schema = &rows[0].schema;
        if rows
            .iter()
            .any(|r| !Arc::ptr_eq(&r.schema, schema) && r.schema != *schema)
        {
            return Err(FeatureError::SchemaMismatch);
        }
        let mut mean = vec![0.0; width];
        let mut std = vec![0.0; width];
        let mut constant = vec![false; width];
        for j in 0..width {
            let mut n = 0.0;
            let mut sum = 0.0;
            for row in rows {
                if row.present[j] {
                    n += 1.0;
                    sum += row.values[j];
                }
            }
            if n == 0.0 {
                constant[j] = true;
                continue;
            }
            let mu = sum / n;
            let var = rows
                .iter()
                .filter(|r| r.present[j])
                .map(|r| (r.values[j] - mu).powi(2))
                .sum::<f64>()
                / n;
            mean[j] = mu;
            std[j] = var.sqrt();
            if std[j] == 0.0 {
                constant[j] = true;
            }
        }
        Ok(Standardizer {
            mean,
            std,
            constant,
        })
    }

    /// Map present values to (x - mean) / std; constant features to 0;
    /// absent values to 0, which is the training mean after centering.
    pub fn apply(&self, vector: &FeatureVector) -> Result<FeatureVector, FeatureError> {
        if vector.values.len() != self.mean.len() {
            return Err(FeatureError::SchemaMismatch);
        }
        let values = vector
            .values
            .iter()
            .zip(&vector.present)
            .enumerate()
            .map(|(j, (&x, &present))| {
                if !present || self.constant[j] {
                    0.0
                } else {
                    (x - self.mean[j]) / self.std[j]
                }
            })
            .collect();
        Ok(FeatureVector {
            schema: Arc::clone(&vector.schema),
            values,
            present: vec![true; vector.present.len()],
        })
    }

    /// Impute absent values with the training mean, leaving present
    /// values raw. Used by scale-invariant models that skip
    /// standardization.
    pub fn impute(&self, vector: &FeatureVector) -> Result<FeatureVector, FeatureError> {
        if vector.values.len() != self.mean.len() {
            return Err(FeatureError::SchemaMismatch);
        }
        let values = vector
            .values
            .iter()
            .zip(&vector.present)
            .enumerate()
            .map(|(j, (&x, &present))| if present { x } else { self.mean[j] })
            .collect();
        Ok(FeatureVector {
            schema: Arc::clone(&vector.schema),
            values,
            present: vec![true; vector.present.len()],
        })
    }
}

/// One matrix row: an instance vector plus its group id and label.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRow {
    pub values: Vec<f64>,
    pub present: Vec<bool>,
    pub group_id: String,
    pub label: Option<u8>,
}

/// An instance-by-feature matrix with group and label bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub schema: Arc<FeatureSchema>,
    pub rows: Vec<MatrixRow>,
}

/// Render a value with 9 significant digits, bit-exactly reproducible.
pub fn fmt_sig9(value: f64) -> String {
    let v = if value == 0.0 { 0.0 } else { value };
    format!("{v:.8e}")
}

const GROUP_COLUMN: &str = "__group_id";
const LABEL_COLUMN: &str = "__label";

impl FeatureMatrix {
    pub fn vector(&self, row: usize) -> FeatureVector {
        FeatureVector {
            schema: Arc::clone(&self.schema),
            values: self.rows[row].values.clone(),
            present: self.rows[row].present.clone(),
        }
    }

    pub fn vectors(&self) -> Vec<FeatureVector> {
        (0..self.rows.len()).map(|i| self.vector(i)).collect()
    }

    /// Write as CSV: header of schema names plus trailing group and label
    /// columns; absent values render as empty fields.
    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        let io_err = |source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = self.schema.names().map(str::to_string).collect();
        header.push(GROUP_COLUMN.into());
        header.push(LABEL_COLUMN.into());
        writer.write_record(&header).map_err(csv_io(path))?;
        for row in &self.rows {
            let mut record: Vec<String> = row
                .values
                .iter()
                .zip(&row.present)
                .map(|(&v, &p)| if p { fmt_sig9(v) } else { String::new() })
                .collect();
            record.push(row.group_id.clone());
            record.push(match row.label {
                Some(1) => "llm".into(),
                Some(_) => "human".into(),
                None => String::new(),
            });
            writer.write_record(&record).map_err(csv_io(path))?;
        }
        let bytes = writer.into_inner().map_err(|e| FeatureError::BadMatrix {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut file = std::fs::File::create(path).map_err(io_err)?;
        file.write_all(&bytes).map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<FeatureMatrix, FeatureError> {
        let bad = |message: String| FeatureError::BadMatrix {
            path: path.display().to_string(),
            message,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.len() < 2
            || header[header.len() - 2] != GROUP_COLUMN
            || header[header.len() - 1] != LABEL_COLUMN
        {
            return Err(bad(format!(
                "matrix must end with {GROUP_COLUMN},{LABEL_COLUMN} columns"
            )));
        }
        let names = &header[..header.len() - 2];
        let lexicon_hashes = crate::linguistic::Lexicons::builtin().hashes.clone();
        let schema = Arc::new(FeatureSchema::from_names(names, lexicon_hashes)?);
        let width = schema.len();
        let mut rows = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| bad(e.to_string()))?;
            if record.len() != width + 2 {
                return Err(bad(format!(
                    "row {} has {} fields, expected {}",
                    idx + 2,
                    record.len(),
                    width + 2
                )));
            }
            let mut values = Vec::with_capacity(width);
            let mut present = Vec::with_capacity(width);
            for field in record.iter().take(width) {
                if field.is_empty() {
                    values.push(0.0);
                    present.push(false);
                } else {
                    let v: f64 = field
                        .parse()
                        .map_err(|e| bad(format!("row {}: bad number {field}: {e}", idx + 2)))?;
                    values.push(v);
                    present.push(true);
                }
            }
            let label = match &record[width + 1] {
                "" => None,
                "human" => Some(0),
                "llm" => Some(1),
                other => return Err(bad(format!("row {}: bad label {other}", idx + 2))),
            };
            rows.push(MatrixRow {
                values,
                present,
                group_id: record[width].to_string(),
                label,
            });
        }
        Ok(FeatureMatrix { schema, rows })
    }
}

fn csv_io(path: &Path) -> impl Fn(csv::Error) -> FeatureError + '_ {
    move |e| FeatureError::BadMatrix {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_schema() -> Arc<FeatureSchema> {
        build_schema(
            JudgmentType::Pairwise,
            &["pair".to_string()],
            0,
            Ablation::BaseOnly,
            vec![],
        )
    }

    fn schema_with_blocks() -> Arc<FeatureSchema> {
        Arc::new(FeatureSchema {
            entries: vec![
                SchemaEntry {
                    name: "base.a".into(),
                    block: Block::Base,
                },
                SchemaEntry {
                    name: "base.b".into(),
                    block: Block::Base,
                },
                SchemaEntry {
                    name: "llm.x".into(),
                    block: Block::Llm,
                },
                SchemaEntry {
                    name: "ling.y".into(),
                    block: Block::Linguistic,
                },
            ],
            version: SCHEMA_VERSION,
            lexicon_hashes: vec![],
        })
    }

    #[test]
    fn assemble_concatenates_in_block_order() {
        let schema = schema_with_blocks();
        let v = assemble(
            &schema,
            FeatureBlock::dense(vec![3.0, 4.0]),
            FeatureBlock::dense(vec![2.0]),
            FeatureBlock::dense(vec![0.5]),
        )
        .unwrap();
        assert_eq!(v.values, vec![3.0, 4.0, 2.0, 0.5]);
    }

    #[test]
    fn assemble_rejects_mismatched_blocks() {
        let schema = schema_with_blocks();
        let err = assemble(
            &schema,
            FeatureBlock::dense(vec![3.0]),
            FeatureBlock::dense(vec![2.0]),
            FeatureBlock::dense(vec![0.5]),
        )
        .unwrap_err();
        assert!(matches!(err, FeatureError::BlockMismatch { .. }));
    }

    #[test]
    fn ablation_schema_drops_blocks() {
        let full = build_schema(
            JudgmentType::Pointwise,
            &["Overall".to_string()],
            0,
            Ablation::Full,
            vec![],
        );
        let base_only = build_schema(
            JudgmentType::Pointwise,
            &["Overall".to_string()],
            0,
            Ablation::BaseOnly,
            vec![],
        );
        assert!(full.block_len(Block::Llm) > 0);
        assert!(full.block_len(Block::Linguistic) > 0);
        assert_eq!(base_only.block_len(Block::Llm), 0);
        assert_eq!(base_only.block_len(Block::Linguistic), 0);
        assert_eq!(base_only.len(), 1);
        assert_ne!(full.hash(), base_only.hash());
    }

    fn vector(schema: &Arc<FeatureSchema>, values: Vec<f64>) -> FeatureVector {
        let present = vec![true; values.len()];
        FeatureVector {
            schema: Arc::clone(schema),
            values,
            present,
        }
    }

    #[test]
    fn standardizer_hand_example() {
        let schema = small_schema();
        let rows = vec![vector(&schema, vec![1.0]), vector(&schema, vec![3.0])];
        let s = Standardizer::fit(&rows).unwrap();
        assert_eq!(s.mean, vec![2.0]);
        assert_eq!(s.std, vec![1.0]);
        let out = s.apply(&vector(&schema, vec![3.0])).unwrap();
        assert_eq!(out.values, vec![1.0]);
    }

    #[test]
    fn constant_features_standardize_to_zero() {
        let schema = small_schema();
        let rows = vec![
            vector(&schema, vec![5.0]),
            vector(&schema, vec![5.0]),
            vector(&schema, vec![5.0]),
        ];
        let s = Standardizer::fit(&rows).unwrap();
        assert!(s.constant[0]);
        let out = s.apply(&vector(&schema, vec![5.0])).unwrap();
        assert_eq!(out.values, vec![0.0]);
    }

    #[test]
    fn absent_values_impute_to_mean() {
        let schema = small_schema();
        let rows = vec![vector(&schema, vec![1.0]), vector(&schema, vec![3.0])];
        let s = Standardizer::fit(&rows).unwrap();
        let absent = FeatureVector {
            schema: Arc::clone(&schema),
            values: vec![0.0],
            present: vec![false],
        };
        // post-standardization zero is the training mean
        assert_eq!(s.apply(&absent).unwrap().values, vec![0.0]);
        assert_eq!(s.impute(&absent).unwrap().values, vec![2.0]);
        // imputation never changes present values
        let present = vector(&schema, vec![9.0]);
        assert_eq!(s.impute(&present).unwrap().values, vec![9.0]);
    }

    #[test]
    fn standardized_training_rows_have_zero_mean_unit_std() {
        let schema = small_schema();
        let rows: Vec<FeatureVector> = [0.5, 1.5, 4.0, -2.0, 3.0]
            .iter()
            .map(|&x| vector(&schema, vec![x]))
            .collect();
        let s = Standardizer::fit(&rows).unwrap();
        let standardized: Vec<f64> = rows
            .iter()
            .map(|r| s.apply(r).unwrap().values[0])
            .collect();
        let n = standardized.len() as f64;
        let mean = standardized.iter().sum::<f64>() / n;
        let var = standardized.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-9);
        assert!((var - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_requires_two_rows() {
        let schema = small_schema();
        assert!(matches!(
            Standardizer::fit(&[vector(&schema, vec![1.0])]),
            Err(FeatureError::TooFewRows(1))
        ));
    }

    #[test]
    fn matrix_round_trip() {
        let schema = schema_with_blocks();
        let matrix = FeatureMatrix {
            schema: Arc::clone(&schema),
            rows: vec![
                MatrixRow {
                    values: vec![3.0, -1.25, 0.0, 123.456789],
                    present: vec![true, true, false, true],
                    group_id: "g, with comma".into(),
                    label: Some(1),
                },
                MatrixRow {
                    values: vec![0.0, 0.5, 2.0, -0.000012345],
                    present: vec![true, true, true, true],
                    group_id: "g2".into(),
                    label: Some(0),
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        matrix.save(&path).unwrap();
        let loaded = FeatureMatrix::load(&path).unwrap();
        assert_eq!(loaded.schema.entries, schema.entries);
        assert_eq!(loaded.rows[0].present, vec![true, true, false, true]);
        assert_eq!(loaded.rows[0].group_id, "g, with comma");
        assert_eq!(loaded.rows[0].label, Some(1));
        assert_eq!(loaded.rows[1].label, Some(0));
        // values survive at 9 significant digits
        for (a, b) in loaded.rows[1].values.iter().zip(&matrix.rows[1].values) {
            assert!((a - b).abs() <= b.abs() * 1e-8);
        }
        // saving again is byte-identical
        let path2 = dir.path().join("m2.csv");
        loaded.save(&path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn fmt_sig9_is_canonical() {
        assert_eq!(fmt_sig9(3.0), "3.00000000e0");
        assert_eq!(fmt_sig9(0.0), "0.00000000e0");
        assert_eq!(fmt_sig9(-0.0), "0.00000000e0");
        assert_eq!(fmt_sig9(-1.25), "-1.25000000e0");
        assert_eq!(fmt_sig9(0.0001), "1.00000000e-4");
    }
}
