//! LLM-derived features: stylistic quality scores and judgment-aligned
//! dimension scores obtained from a judge-model provider, with caching
//! and a fully offline replay mode.
//!
//! Rationale text is stored for audit but never becomes a feature; the
//! detection task uses scores and candidate content only.

mod cache;
mod parse;
mod prompt;
mod provider;

pub use cache::{cache_key, FeatureCache};
pub use parse::{parse_judgment_json, ExpectedField, ExpectedSchema, ParsedJudgment};
pub use prompt::{render_prompt, template_for};
pub use provider::{HttpProvider, JudgeProvider, ProviderConfig, ProviderError, StubProvider};

use crate::data::{JudgmentInstance, JudgmentType, ScaleSpec};
use crate::features::FeatureBlock;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("no template {template_id} for {judgment_type} instances")]
    UnknownTemplate {
        template_id: String,
        judgment_type: JudgmentType,
    },
    #[error("missing placeholder content: {0}")]
    MissingPlaceholder(String),
    #[error("no parseable JSON object in provider output")]
    NoJsonObject,
    #[error("required field {field} missing or non-numeric")]
    MissingField { field: String },
    #[error("field {field} value {value} outside declared range [{min}, {max}]")]
    OutOfRange {
        field: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("offline strict mode: no cached features for candidate {candidate_id}")]
    CacheMiss { candidate_id: String },
    #[error("provider failed after retries: {0}")]
    Provider(#[from] ProviderError),
    #[error("cache file {path}: {message}")]
    CacheIo { path: String, message: String },
}

/// One judge-model record: the three stylistic scores, scores aligned to
/// the dataset's own judgment dimensions, an optional overall score, and
/// the audit-only rationale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmFeatureRecord {
    pub style: f64,
    pub format: f64,
    pub wording: f64,
    pub aligned: BTreeMap<String, f64>,
    pub overall: Option<f64>,
    pub rationale: Option<String>,
}

/// Range of the stylistic scores, fixed across datasets.
pub const STYLE_RANGE: (f64, f64) = (0.0, 4.0);

/// The expected response fields for an instance of the given scale.
pub fn expected_schema(scale: &ScaleSpec) -> ExpectedSchema {
    let mut schema = ExpectedSchema::default()
        .field("Style", STYLE_RANGE.0, STYLE_RANGE.1, true)
        .field("Format", STYLE_RANGE.0, STYLE_RANGE.1, true)
        .field("Wording", STYLE_RANGE.0, STYLE_RANGE.1, true);
    match scale.judgment_type() {
        JudgmentType::Pointwise => {
            for dim in &scale.dimensions {
                schema = schema.field(&dim.name, dim.min as f64, dim.max as f64, true);
            }
            let first = &scale.dimensions[0];
            schema = schema.field("Overall", first.min as f64, first.max as f64, false);
        }
        JudgmentType::Pairwise => {
            let x = scale.pair_levels_x.unwrap_or(1) as f64;
            schema = schema.field("Score", -x, x, true);
        }
        JudgmentType::Listwise => {
            let dim = &scale.dimensions[0];
            for i in 0..scale.listwise_items.unwrap_or(0) {
                schema = schema.field(
                    &format!("Response{} Score", i + 1),
                    dim.min as f64,
                    dim.max as f64,
                    true,
                );
            }
        }
    }
    schema
}

/// Build the feature record from parsed fields. Listwise per-item scores
/// collapse to their mean so the aligned block keeps one entry per
/// dataset dimension.
pub fn record_from_parsed(parsed: &ParsedJudgment, scale: &ScaleSpec) -> LlmFeatureRecord {
    let mut aligned = BTreeMap::new();
    let mut overall = None;
    match scale.judgment_type() {
        JudgmentType::Pointwise => {
            for dim in &scale.dimensions {
                if let Some(&v) = parsed.values.get(&dim.name) {
                    aligned.insert(dim.name.clone(), v);
                }
            }
            overall = parsed.values.get("Overall").copied();
        }
        JudgmentType::Pairwise => {
            if let Some(&v) = parsed.values.get("Score") {
                aligned.insert("pair".to_string(), v);
            }
        }
        JudgmentType::Listwise => {
            let k = scale.listwise_items.unwrap_or(0);
            let scores: Vec<f64> = (0..k)
                .filter_map(|i| parsed.values.get(&format!("Response{} Score", i + 1)))
                .copied()
                .collect();
            if !scores.is_empty() {
                let mean = scores.iter().sum::<f64>() / scores.len() as f64;
                aligned.insert(scale.dimensions[0].name.clone(), mean);
            }
        }
    }
    LlmFeatureRecord {
        style: parsed.values.get("Style").copied().unwrap_or(0.0),
        format: parsed.values.get("Format").copied().unwrap_or(0.0),
        wording: parsed.values.get("Wording").copied().unwrap_or(0.0),
        aligned,
        overall,
        rationale: parsed.rationale.clone(),
    }
}

/// Lay a record out as the llm feature block:
/// `style, format, wording, aligned.<dim>..., overall, valid`.
/// `None` means the fetch failed; every value is zero and only the
/// validity indicator is present, so imputation happens downstream.
pub fn record_to_block(
    record: Option<&LlmFeatureRecord>,
    dimension_names: &[String],
) -> FeatureBlock {
    let width = 3 + dimension_names.len() + 2;
    match record {
        Some(r) => {
            let mut values = vec![r.style, r.format, r.wording];
            let mut present = vec![true, true, true];
            for dim in dimension_names {
                match r.aligned.get(dim) {
                    Some(&v) => {
                        values.push(v);
                        present.push(true);
                    }
                    None => {
                        values.push(0.0);
                        present.push(false);
                    }
                }
            }
            match r.overall {
                Some(v) => {
                    values.push(v);
                    present.push(true);
                }
                None => {
                    values.push(0.0);
                    present.push(false);
                }
            }
            values.push(1.0);
            present.push(true);
            FeatureBlock { values, present }
        }
        None => {
            let mut values = vec![0.0; width];
            let mut present = vec![false; width];
            // the validity indicator itself is always a real observation
            values[width - 1] = 0.0;
            present[width - 1] = true;
            FeatureBlock { values, present }
        }
    }
}

/// Whether fetching may go to the network and how failures surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FetchMode {
    /// Cache only; a miss is an error.
    OfflineStrict,
    /// Cache only; a miss yields zeros with `llm.valid = 0`.
    OfflineLenient,
    /// Call the provider on a miss; final failures are errors.
    OnlineStrict,
    /// Call the provider on a miss; final failures yield zeros.
    OnlineLenient,
}

impl FetchMode {
    fn online(self) -> bool {
        matches!(self, FetchMode::OnlineStrict | FetchMode::OnlineLenient)
    }
    fn strict(self) -> bool {
        matches!(self, FetchMode::OfflineStrict | FetchMode::OnlineStrict)
    }
}

/// Fetches llm feature blocks through the cache.
pub struct LlmFetcher<'a> {
    pub config: &'a ProviderConfig,
    pub provider: Option<&'a dyn JudgeProvider>,
    pub cache: &'a FeatureCache,
    pub mode: FetchMode,
}

impl<'a> LlmFetcher<'a> {
    /// Fetch the llm block for one instance: cache hit returns without
    /// any provider call; a miss renders the prompt, calls the provider
    /// with exponential backoff, parses, range-checks, and caches.
    pub fn fetch(
        &self,
        instance: &JudgmentInstance,
        scale: &ScaleSpec,
        dimension_names: &[String],
    ) -> Result<FeatureBlock, LlmError> {
        let template_id = template_for(instance.judgment_type());
        let prompt = render_prompt(template_id, instance, scale)?;
        let key = cache_key(template_id, &prompt, &self.config.model_id);
        if let Some(record) = self.cache.get(&key) {
            return Ok(record_to_block(Some(&record), dimension_names));
        }
        if !self.mode.online() {
            return if self.mode.strict() {
                Err(LlmError::CacheMiss {
                    candidate_id: instance.candidate.id.clone(),
                })
            } else {
                Ok(record_to_block(None, dimension_names))
            };
        }
        let provider = self.provider.expect("online mode requires a provider");
        let expected = expected_schema(scale);
        let attempts = self.config.max_retries + 1;
        let mut last_error: Option<LlmError> = None;
        for attempt in 0..attempts {
            if attempt > 0 && self.config.backoff_ms > 0 {
                let wait = self.config.backoff_ms << (attempt - 1).min(8);
                std::thread::sleep(std::time::Duration::from_millis(wait));
            }
            match provider.complete(&prompt) {
                Ok(raw) => match parse_judgment_json(&raw, &expected) {
                    Ok(parsed) => {
                        let record = record_from_parsed(&parsed, scale);
                        self.cache.put(key, record.clone());
                        return Ok(record_to_block(Some(&record), dimension_names));
                    }
                    Err(e) => last_error = Some(e),
                },
                Err(e) => {
                    let fatal = !e.retryable();
                    last_error = Some(LlmError::Provider(e));
                    if fatal {
                        break;
                    }
                }
            }
        }
        let error = last_error.expect("at least one attempt ran");
        if self.mode.strict() {
            Err(error)
        } else {
            Ok(record_to_block(None, dimension_names))
        }
    }

    /// Fetch blocks for many instances with up to `max_concurrent`
    /// in-flight provider calls. Output order matches input order.
    pub fn fetch_batch(
        &self,
        instances: &[&JudgmentInstance],
        scale: &ScaleSpec,
        dimension_names: &[String],
    ) -> Result<Vec<FeatureBlock>, LlmError> {
        let jobs = self.config.max_concurrent.max(1).min(instances.len().max(1));
        if jobs <= 1 || instances.len() <= 1 {
            return instances
                .iter()
                .map(|i| self.fetch(i, scale, dimension_names))
                .collect();
        }
        let cursor = std::sync::atomic::AtomicUsize::new(0);
        let results: Vec<std::sync::Mutex<Option<Result<FeatureBlock, LlmError>>>> =
            (0..instances.len()).map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let idx = cursor.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if idx >= instances.len() {
                        break;
                    }
                    let outcome = self.fetch(instances[idx], scale, dimension_names);
                    *results[idx].lock().unwrap() = Some(outcome);
                });
            }
        });
        results
            .into_iter()
            .map(|cell| cell.into_inner().unwrap().expect("worker filled every slot"))
            .collect()
    }
}
