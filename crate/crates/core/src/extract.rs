//! Feature extraction pipeline: turns a dataset into an instance-level
//! feature matrix by concatenating base judgment scores, LLM-derived
//! features, and linguistic features per instance.

use crate::data::{Dataset, JudgmentInstance, JudgmentScore};
use crate::features::{
    assemble, build_schema, Ablation, FeatureBlock, FeatureError, FeatureMatrix, MatrixRow,
};
use crate::linguistic::{LinguisticError, LinguisticExtractor};
use crate::llm::{FeatureCache, FetchMode, JudgeProvider, LlmError, LlmFetcher, ProviderConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("ablation {0:?} needs llm features but no cache or provider was given")]
    MissingLlmSource(Ablation),
    #[error(transparent)]
    Linguistic(#[from] LinguisticError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Where llm-block features come from.
pub enum LlmSource<'a> {
    /// No llm block at all; only valid for ablations without one.
    None,
    /// Cache-only replay.
    Offline {
        config: &'a ProviderConfig,
        cache: &'a FeatureCache,
        strict: bool,
    },
    /// Live provider behind the cache.
    Online {
        config: &'a ProviderConfig,
        provider: &'a dyn JudgeProvider,
        cache: &'a FeatureCache,
        strict: bool,
    },
}

/// Base block: the judgment scores as given.
pub fn base_features(instance: &JudgmentInstance, dimension_names: &[String]) -> FeatureBlock {
    match &instance.score {
        JudgmentScore::Pointwise { dims } => FeatureBlock::dense(
            dimension_names
                .iter()
                .map(|name| dims.get(name).copied().unwrap_or(0.0))
                .collect(),
        ),
        JudgmentScore::Pairwise { pair } => FeatureBlock::dense(vec![*pair as f64]),
        JudgmentScore::Listwise { items, ranking } => {
            let mut values = items.clone();
            values.extend(ranking.iter().map(|&r| r as f64));
            FeatureBlock::dense(values)
        }
    }
}

/// Extract the full matrix for a dataset under an ablation.
pub fn extract_matrix(
    dataset: &Dataset,
    ablation: Ablation,
    llm: &LlmSource<'_>,
) -> Result<FeatureMatrix, ExtractError> {
    let linguistic = LinguisticExtractor::default();
    let k_items = dataset.scale.listwise_items.unwrap_or(0) as usize;
    let schema = build_schema(
        dataset.judgment_type(),
        &dataset.dimension_names,
        k_items,
        ablation,
        linguistic.lexicon_hashes(),
    );

    let flat: Vec<(&JudgmentInstance, &str, Option<u8>)> = dataset
        .groups
        .iter()
        .flat_map(|g| {
            g.instances
                .iter()
                .map(move |i| (i, g.group_id.as_str(), g.label.as_class()))
        })
        .collect();

    let llm_blocks: Vec<FeatureBlock> = if ablation.has_llm() {
        let fetcher = match llm {
            LlmSource::None => return Err(ExtractError::MissingLlmSource(ablation)),
            LlmSource::Offline {
                config,
                cache,
                strict,
            } => LlmFetcher {
                config,
                provider: None,
                cache,
                mode: if *strict {
                    FetchMode::OfflineStrict
                } else {
                    FetchMode::OfflineLenient
                },
            },
            LlmSource::Online {
                config,
                provider,
                cache,
                strict,
            } => LlmFetcher {
                config,
                provider: Some(*provider),
                cache,
                mode: if *strict {
                    FetchMode::OnlineStrict
                } else {
                    FetchMode::OnlineLenient
                },
            },
        };
        let instances: Vec<&JudgmentInstance> = flat.iter().map(|(i, _, _)| *i).collect();
        fetcher.fetch_batch(&instances, &dataset.scale, &dataset.dimension_names)?
    } else {
        vec![FeatureBlock::default(); flat.len()]
    };

    let mut rows = Vec::with_capacity(flat.len());
    for ((instance, group_id, label), llm_block) in flat.into_iter().zip(llm_blocks) {
        let base = base_features(instance, &dataset.dimension_names);
        let ling = if ablation.has_linguistic() {
            FeatureBlock::dense(linguistic.extract(instance, k_items)?)
        } else {
            FeatureBlock::default()
        };
        let vector = assemble(&schema, base, llm_block, ling)?;
        rows.push(MatrixRow {
            values: vector.values,
            present: vector.present,
            group_id: group_id.to_string(),
            label,
        });
    }
    Ok(FeatureMatrix { schema, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Candidate, DimScale, Dataset, JudgmentGroup, JudgmentType, Label, ScaleSpec};
    use std::collections::BTreeMap;

    fn helpsteer_like() -> Dataset {
        let names = ["Helpfulness", "Correctness", "Coherence", "Complexity", "Verbosity"];
        let scale = ScaleSpec::pointwise(
            names
                .iter()
                .map(|n| DimScale {
                    name: (*n).into(),
                    min: 0,
                    max: 4,
                    step: 1,
                })
                .collect(),
        );
        let scores = [3.0, 4.0, 4.0, 2.0, 1.0];
        let dims: BTreeMap<String, f64> = names
            .iter()
            .zip(scores)
            .map(|(n, s)| ((*n).to_string(), s))
            .collect();
        let groups = vec![JudgmentGroup {
            group_id: "g".into(),
            label: Label::Llm,
            judge: None,
            judgment_type: JudgmentType::Pointwise,
            instances: vec![JudgmentInstance {
                candidate: Candidate {
                    id: "c".into(),
                    prompt: Some("q".into()),
                    responses: vec!["Hello world. How are you?".into()],
                    meta: BTreeMap::new(),
                },
                score: JudgmentScore::Pointwise { dims },
            }],
        }];
        Dataset::new(groups, scale).unwrap()
    }

    #[test]
    fn base_block_passes_scores_through_in_order() {
        let dataset = helpsteer_like();
        let block = base_features(&dataset.groups[0].instances[0], &dataset.dimension_names);
        assert_eq!(block.values, vec![3.0, 4.0, 4.0, 2.0, 1.0]);
    }

    #[test]
    fn base_block_pairwise_and_listwise() {
        let pairwise = JudgmentInstance {
            candidate: Candidate {
                id: "c".into(),
                prompt: None,
                responses: vec!["a".into(), "b".into()],
                meta: BTreeMap::new(),
            },
            score: JudgmentScore::Pairwise { pair: -2 },
        };
        assert_eq!(
            base_features(&pairwise, &["pair".to_string()]).values,
            vec![-2.0]
        );
        let listwise = JudgmentInstance {
            candidate: Candidate {
                id: "c".into(),
                prompt: None,
                responses: vec!["a".into(), "b".into(), "c".into()],
                meta: BTreeMap::new(),
            },
            score: JudgmentScore::Listwise {
                items: vec![4.0, 2.0, 1.0],
                ranking: vec![0, 1, 2],
            },
        };
        assert_eq!(
            base_features(&listwise, &["relevance".to_string()]).values,
            vec![4.0, 2.0, 1.0, 0.0, 1.0, 2.0]
        );
    }

    #[test]
    fn base_ling_extraction_without_llm() {
        let dataset = helpsteer_like();
        let matrix = extract_matrix(&dataset, Ablation::BaseLing, &LlmSource::None).unwrap();
        assert_eq!(matrix.rows.len(), 1);
        let idx = matrix.schema.position("ling.word_count").unwrap();
        assert_eq!(matrix.rows[0].values[idx], 5.0);
        assert_eq!(matrix.rows[0].label, Some(1));
        assert!(matrix.schema.position("llm.style").is_none());
    }

    #[test]
    fn full_ablation_requires_llm_source() {
        let dataset = helpsteer_like();
        assert!(matches!(
            extract_matrix(&dataset, Ablation::Full, &LlmSource::None),
            Err(ExtractError::MissingLlmSource(_))
        ));
    }

    #[test]
    fn offline_lenient_fills_invalid_llm_block() {
        let dataset = helpsteer_like();
        let cache = FeatureCache::in_memory();
        let config = ProviderConfig::default();
        let matrix = extract_matrix(
            &dataset,
            Ablation::Full,
            &LlmSource::Offline {
                config: &config,
                cache: &cache,
                strict: false,
            },
        )
        .unwrap();
        let valid_idx = matrix.schema.position("llm.valid").unwrap();
        assert_eq!(matrix.rows[0].values[valid_idx], 0.0);
        assert!(matrix.rows[0].present[valid_idx]);
        let style_idx = matrix.schema.position("llm.style").unwrap();
        assert!(!matrix.rows[0].present[style_idx]);
    }

    #[test]
    fn offline_strict_miss_fails() {
        let dataset = helpsteer_like();
        let cache = FeatureCache::in_memory();
        let config = ProviderConfig::default();
        let out = extract_matrix(
            &dataset,
            Ablation::Full,
            &LlmSource::Offline {
                config: &config,
                cache: &cache,
                strict: true,
            },
        );
        assert!(matches!(
            out,
            Err(ExtractError::Llm(LlmError::CacheMiss { .. }))
        ));
    }

    #[test]
    fn online_extraction_populates_and_caches() {
        use crate::llm::StubProvider;
        let dataset = helpsteer_like();
        let cache = FeatureCache::in_memory();
        let config = ProviderConfig {
            backoff_ms: 0,
            ..ProviderConfig::default()
        };
        let body = r#"{"Rationale":"r","Style":1,"Format":2,"Wording":3,
            "Helpfulness":4,"Correctness":3,"Coherence":2,"Complexity":1,"Verbosity":0,
            "Overall":3}"#;
        let provider = StubProvider::constant(body);
        let matrix = extract_matrix(
            &dataset,
            Ablation::Full,
            &LlmSource::Online {
                config: &config,
                provider: &provider,
                cache: &cache,
                strict: true,
            },
        )
        .unwrap();
        let style_idx = matrix.schema.position("llm.style").unwrap();
        assert_eq!(matrix.rows[0].values[style_idx], 1.0);
        assert_eq!(cache.len(), 1);
        // replay offline, strict: identical row
        let replay = extract_matrix(
            &dataset,
            Ablation::Full,
            &LlmSource::Offline {
                config: &config,
                cache: &cache,
                strict: true,
            },
        )
        .unwrap();
        assert_eq!(replay.rows, matrix.rows);
        assert_eq!(provider.calls(), 1);
    }
}
