//! Judgment data model: candidates, scores, groups, datasets.
//!
//! A judgment group is the unit of detection: `k` (candidate, score)
//! pairs all produced by the same kind of source (human or LLM). Groups
//! are label-pure by construction; mixing sources inside one group would
//! leave the group label undefined.

mod io;
mod ops;

pub use io::{load_dataset, save_dataset};
pub use ops::{
    coarsen_scale, flatten, project_dimensions, regroup, split_dataset, LabeledInstance,
    RegroupOutcome,
};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: malformed group record: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("group {group_id}: dimension {dimension}: value {value} is not on the scale grid")]
    ScaleViolation {
        group_id: String,
        dimension: String,
        value: f64,
    },
    #[error("group {group_id}: expected {expected} responses for a {kind} judgment, got {got}")]
    ArityMismatch {
        group_id: String,
        kind: JudgmentType,
        expected: usize,
        got: usize,
    },
    #[error("group {group_id}: score form does not match judgment type {expected}")]
    ScoreTypeMismatch {
        group_id: String,
        expected: JudgmentType,
    },
    #[error("group {group_id}: {message}")]
    InvalidGroup { group_id: String, message: String },
    #[error("invalid scale spec: {0}")]
    InvalidScale(String),
    #[error("group size k must be positive")]
    InvalidGroupSize,
    #[error("label {label} has {available} instances, fewer than group size {k}")]
    TooFewInstances {
        label: String,
        available: usize,
        k: usize,
    },
    #[error("coarsening map is missing source level {0}")]
    MappingIncomplete(i64),
    #[error("coarsening image is not a valid grid: {0}")]
    MappingBadImage(String),
    #[error("unknown dimension {0}")]
    UnknownDimension(String),
    #[error("dimension subset must be non-empty")]
    EmptyProjection,
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("too few groups to stratify: label {label} has {count} groups")]
    TooFewGroups { label: String, count: usize },
    #[error("dataset mixes judgment types: {0} and {1}")]
    MixedTypes(JudgmentType, JudgmentType),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The three judgment forms: a per-item score vector, a signed preference
/// between two candidates, or a ranking (with per-item scores) over a set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgmentType {
    Pointwise,
    Pairwise,
    Listwise,
}

impl std::fmt::Display for JudgmentType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            JudgmentType::Pointwise => write!(f, "pointwise"),
            JudgmentType::Pairwise => write!(f, "pairwise"),
            JudgmentType::Listwise => write!(f, "listwise"),
        }
    }
}

/// Source label of a group. `Unknown` is the inference-time state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Human,
    Llm,
    Unknown,
}

impl Label {
    /// Numeric label used for training; LLM is the positive class.
    pub fn as_class(self) -> Option<u8> {
        match self {
            Label::Human => Some(0),
            Label::Llm => Some(1),
            Label::Unknown => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Human => "human",
            Label::Llm => "llm",
            Label::Unknown => "unknown",
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Label::Human => serializer.serialize_str("human"),
            Label::Llm => serializer.serialize_str("llm"),
            Label::Unknown => serializer.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw: Option<String> = Option::deserialize(deserializer)?;
        match raw.as_deref() {
            None => Ok(Label::Unknown),
            Some("human") => Ok(Label::Human),
            Some("llm") => Ok(Label::Llm),
            Some(other) => Err(serde::de::Error::custom(format!(
                "label must be \"human\", \"llm\", or null, got {other:?}"
            ))),
        }
    }
}

/// Integer grid for one judgment dimension: levels `min, min+step, ..., max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimScale {
    pub name: String,
    pub min: i64,
    pub max: i64,
    pub step: i64,
}

impl DimScale {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.min >= self.max {
            return Err(DataError::InvalidScale(format!(
                "dimension {}: min {} must be below max {}",
                self.name, self.min, self.max
            )));
        }
        if self.step < 1 {
            return Err(DataError::InvalidScale(format!(
                "dimension {}: step {} must be at least 1",
                self.name, self.step
            )));
        }
        if (self.max - self.min) % self.step != 0 {
            return Err(DataError::InvalidScale(format!(
                "dimension {}: span {} is not divisible by step {}",
                self.name,
                self.max - self.min,
                self.step
            )));
        }
        Ok(())
    }

    /// Number of levels on the grid; always at least 2 for a valid scale.
    pub fn level_count(&self) -> u32 {
        ((self.max - self.min) / self.step + 1) as u32
    }

    pub fn levels(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.level_count() as i64).map(move |i| self.min + i * self.step)
    }

    pub fn contains(&self, value: f64) -> bool {
        if !value.is_finite() || value.fract() != 0.0 {
            return false;
        }
        let v = value as i64;
        v >= self.min && v <= self.max && (v - self.min) % self.step == 0
    }
}

/// Rating-scale description for a dataset; exactly one judgment type.
///
/// Pointwise scales list one grid per dimension. Pairwise scales are the
/// signed comparative grid `-x..=x` given by `pair_levels_x`. Listwise
/// scales carry the per-item score grid as a single dimension entry plus
/// the fixed candidate count `listwise_items`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpec {
    #[serde(default)]
    pub dimensions: Vec<DimScale>,
    #[serde(default)]
    pub pair_levels_x: Option<u32>,
    #[serde(default)]
    pub listwise_items: Option<u32>,
}

impl ScaleSpec {
    pub fn pointwise(dimensions: Vec<DimScale>) -> Self {
        ScaleSpec {
            dimensions,
            pair_levels_x: None,
            listwise_items: None,
        }
    }

    pub fn pairwise(x: u32) -> Self {
        ScaleSpec {
            dimensions: Vec::new(),
            pair_levels_x: Some(x),
            listwise_items: None,
        }
    }

    pub fn listwise(item_scale: DimScale, k_items: u32) -> Self {
        ScaleSpec {
            dimensions: vec![item_scale],
            pair_levels_x: None,
            listwise_items: Some(k_items),
        }
    }

    pub fn judgment_type(&self) -> JudgmentType {
        if self.pair_levels_x.is_some() {
            JudgmentType::Pairwise
        } else if self.listwise_items.is_some() {
            JudgmentType::Listwise
        } else {
            JudgmentType::Pointwise
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        match (self.pair_levels_x, self.listwise_items) {
            (Some(_), Some(_)) => {
                return Err(DataError::InvalidScale(
                    "pair_levels_x and listwise_items are mutually exclusive".into(),
                ))
            }
            (Some(x), None) => {
                if x == 0 {
                    return Err(DataError::InvalidScale(
                        "pair_levels_x must be positive".into(),
                    ));
                }
                if !self.dimensions.is_empty() {
                    return Err(DataError::InvalidScale(
                        "pairwise scales derive their grid from pair_levels_x; \
                         dimension entries are not allowed"
                            .into(),
                    ));
                }
            }
            (None, Some(k)) => {
                if k < 2 {
                    return Err(DataError::InvalidScale(
                        "listwise_items must be at least 2".into(),
                    ));
                }
                if self.dimensions.len() != 1 {
                    return Err(DataError::InvalidScale(
                        "listwise scales need exactly one per-item score grid".into(),
                    ));
                }
            }
            (None, None) => {
                if self.dimensions.is_empty() {
                    return Err(DataError::InvalidScale(
                        "pointwise scales need at least one dimension".into(),
                    ));
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for dim in &self.dimensions {
            dim.validate()?;
            if !seen.insert(dim.name.as_str()) {
                return Err(DataError::InvalidScale(format!(
                    "duplicate dimension name {}",
                    dim.name
                )));
            }
        }
        Ok(())
    }

    /// Ordered judgment dimension names. Pairwise datasets expose a single
    /// synthetic dimension named `pair`.
    pub fn dimension_names(&self) -> Vec<String> {
        match self.judgment_type() {
            JudgmentType::Pairwise => vec!["pair".to_string()],
            _ => self.dimensions.iter().map(|d| d.name.clone()).collect(),
        }
    }

    pub fn response_arity(&self) -> usize {
        match self.judgment_type() {
            JudgmentType::Pointwise => 1,
            JudgmentType::Pairwise => 2,
            JudgmentType::Listwise => self.listwise_items.unwrap_or(0) as usize,
        }
    }

    pub fn load(path: &std::path::Path) -> Result<ScaleSpec, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let scale: ScaleSpec = serde_json::from_str(&text)
            .map_err(|e| DataError::InvalidScale(format!("{}: {e}", path.display())))?;
        scale.validate()?;
        Ok(scale)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), DataError> {
        let body = serde_json::to_string_pretty(self).expect("scale spec serializes");
        std::fs::write(path, body + "\n").map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Content being judged: one response for pointwise, two for pairwise,
/// `k_items` for listwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub prompt: Option<String>,
    pub responses: Vec<String>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

/// One judgment score in the form matching its judgment type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JudgmentScore {
    Pointwise { dims: BTreeMap<String, f64> },
    Pairwise { pair: i64 },
    Listwise { items: Vec<f64>, ranking: Vec<usize> },
}

impl JudgmentScore {
    pub fn judgment_type(&self) -> JudgmentType {
        match self {
            JudgmentScore::Pointwise { .. } => JudgmentType::Pointwise,
            JudgmentScore::Pairwise { .. } => JudgmentType::Pairwise,
            JudgmentScore::Listwise { .. } => JudgmentType::Listwise,
        }
    }
}

/// Canonical listwise ranking: indices sorted by non-increasing score,
/// ties broken by lower item index first.
pub fn canonical_ranking(items: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        items[b]
            .partial_cmp(&items[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// One (candidate, score) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentInstance {
    pub candidate: Candidate,
    pub score: JudgmentScore,
}

impl JudgmentInstance {
    pub fn judgment_type(&self) -> JudgmentType {
        self.score.judgment_type()
    }
}

/// A batch of judgments classified jointly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentGroup {
    pub group_id: String,
    pub label: Label,
    pub judge: Option<String>,
    #[serde(rename = "type")]
    pub judgment_type: JudgmentType,
    pub instances: Vec<JudgmentInstance>,
}

impl JudgmentGroup {
    pub fn validate(&self, scale: &ScaleSpec) -> Result<(), DataError> {
        if self.instances.is_empty() {
            return Err(DataError::InvalidGroup {
                group_id: self.group_id.clone(),
                message: "group must contain at least one instance".into(),
            });
        }
        if self.judgment_type != scale.judgment_type() {
            return Err(DataError::InvalidGroup {
                group_id: self.group_id.clone(),
                message: format!(
                    "group type {} does not match scale type {}",
                    self.judgment_type,
                    scale.judgment_type()
                ),
            });
        }
        for instance in &self.instances {
            if instance.judgment_type() != self.judgment_type {
                return Err(DataError::ScoreTypeMismatch {
                    group_id: self.group_id.clone(),
                    expected: self.judgment_type,
                });
            }
            let arity = scale.response_arity();
            if instance.candidate.responses.len() != arity {
                return Err(DataError::ArityMismatch {
                    group_id: self.group_id.clone(),
                    kind: self.judgment_type,
                    expected: arity,
                    got: instance.candidate.responses.len(),
                });
            }
            self.validate_score(&instance.score, scale)?;
        }
        Ok(())
    }

    fn validate_score(&self, score: &JudgmentScore, scale: &ScaleSpec) -> Result<(), DataError> {
        match score {
            JudgmentScore::Pointwise { dims } => {
                for dim in &scale.dimensions {
                    let value = dims.get(&dim.name).copied().ok_or_else(|| {
                        DataError::InvalidGroup {
                            group_id: self.group_id.clone(),
                            message: format!("missing score for dimension {}", dim.name),
                        }
                    })?;
                    if !dim.contains(value) {
                        return Err(DataError::ScaleViolation {
                            group_id: self.group_id.clone(),
                            dimension: dim.name.clone(),
                            value,
                        });
                    }
                }
                if let Some(extra) = dims.keys().find(|k| {
                    !scale.dimensions.iter().any(|d| &d.name == *k)
                }) {
                    return Err(DataError::InvalidGroup {
                        group_id: self.group_id.clone(),
                        message: format!("unknown score dimension {extra}"),
                    });
                }
            }
            JudgmentScore::Pairwise { pair } => {
                let x = scale.pair_levels_x.unwrap_or(0) as i64;
                if *pair < -x || *pair > x {
                    return Err(DataError::ScaleViolation {
                        group_id: self.group_id.clone(),
                        dimension: "pair".into(),
                        value: *pair as f64,
                    });
                }
            }
            JudgmentScore::Listwise { items, ranking } => {
                let k = scale.listwise_items.unwrap_or(0) as usize;
                if items.len() != k {
                    return Err(DataError::InvalidGroup {
                        group_id: self.group_id.clone(),
                        message: format!("expected {k} item scores, got {}", items.len()),
                    });
                }
                let dim = &scale.dimensions[0];
                for &value in items {
                    if !dim.contains(value) {
                        return Err(DataError::ScaleViolation {
                            group_id: self.group_id.clone(),
                            dimension: dim.name.clone(),
                            value,
                        });
                    }
                }
                if *ranking != canonical_ranking(items) {
                    return Err(DataError::InvalidGroup {
                        group_id: self.group_id.clone(),
                        message: "ranking is not the canonical non-increasing order \
                                  with lower-index tie-breaking"
                            .into(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// A validated collection of judgment groups sharing one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub groups: Vec<JudgmentGroup>,
    pub scale: ScaleSpec,
    pub dimension_names: Vec<String>,
}

impl Dataset {
    /// Build a dataset, validating every group against the scale.
    pub fn new(groups: Vec<JudgmentGroup>, scale: ScaleSpec) -> Result<Dataset, DataError> {
        scale.validate()?;
        for group in &groups {
            group.validate(&scale)?;
        }
        if let Some(first) = groups.first() {
            for group in &groups[1..] {
                if group.judgment_type != first.judgment_type {
                    return Err(DataError::MixedTypes(
                        first.judgment_type,
                        group.judgment_type,
                    ));
                }
            }
        }
        let dimension_names = scale.dimension_names();
        Ok(Dataset {
            groups,
            scale,
            dimension_names,
        })
    }

    pub fn judgment_type(&self) -> JudgmentType {
        self.scale.judgment_type()
    }

    /// Total instance count across all groups.
    pub fn instance_count(&self) -> usize {
        self.groups.iter().map(|g| g.instances.len()).sum()
    }
}
