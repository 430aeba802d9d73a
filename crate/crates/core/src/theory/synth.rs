//! Synthetic judgment corpora with a provable human/LLM distribution
//! gap, for validating the detectability predictions end to end.
//!
//! The LLM score distribution is built from the human one by moving
//! exactly `target_delta` probability mass from the lower half of the
//! grid to the top level, so the per-dimension TV distance is the target
//! by construction rather than by estimation. Candidate texts come from
//! a seeded template pool; when length bias is enabled, LLM-labeled
//! responses grow with their own scores, planting the correlation the
//! linguistic features exist to catch.

use super::{JudgmentSpecTheory, TheoryError};
use crate::data::{
    canonical_ranking, regroup, Candidate, Dataset, DimScale, JudgmentInstance, JudgmentScore,
    Label, LabeledInstance, ScaleSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Human and LLM score distributions over the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfPair {
    pub human: Vec<f64>,
    pub llm: Vec<f64>,
}

/// Uniform human pmf plus an LLM pmf shifted by exact mass transfer:
/// `target_delta` mass drains from the lowest cells upward and lands on
/// the top cell, giving TV(human, llm) = target_delta exactly.
pub fn shifted_pmf_pair(levels: usize, target_delta: f64) -> Result<PmfPair, TheoryError> {
    if levels < 2 {
        return Err(TheoryError::InvalidSpec("need at least 2 levels".into()));
    }
    if !(0.0..=1.0).contains(&target_delta) {
        return Err(TheoryError::Domain("target delta must lie in [0, 1]".into()));
    }
    let human = vec![1.0 / levels as f64; levels];
    let lower = levels.div_ceil(2);
    let max_transfer = lower as f64 / levels as f64;
    if target_delta > max_transfer + 1e-12 {
        return Err(TheoryError::UnrealizableDelta {
            target: target_delta,
            max: max_transfer,
        });
    }
    let mut llm = human.clone();
    let mut remaining = target_delta;
    let mut moved = 0.0;
    for cell in llm.iter_mut().take(lower) {
        let take = cell.min(remaining);
        *cell -= take;
        moved += take;
        remaining -= take;
        if remaining <= 0.0 {
            break;
        }
    }
    llm[levels - 1] += moved;
    Ok(PmfPair { human, llm })
}

fn default_dims() -> usize {
    1
}
fn default_instances() -> usize {
    500
}
fn default_group() -> usize {
    4
}
fn default_item_levels() -> u32 {
    4
}

/// Configuration for the synthetic corpus generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub spec: JudgmentSpecTheory,
    /// Judgment dimensions; only pointwise specs may exceed 1.
    #[serde(default = "default_dims")]
    pub dims: usize,
    /// Per-dimension TV distance between the label distributions.
    pub target_delta: f64,
    /// Instances per label.
    #[serde(default = "default_instances")]
    pub n_instances: usize,
    #[serde(default = "default_group")]
    pub group_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// Extra words an LLM-labeled response gains per unit of normalized
    /// score; 0 disables the planted length bias.
    #[serde(default)]
    pub length_bias_words: f64,
    /// Probability of swapping a filler word for a hedge or discourse
    /// marker, as decoy signal for the linguistic features.
    #[serde(default)]
    pub feature_noise: f64,
    /// Per-item score levels for listwise corpora (grid 1..=item_levels).
    #[serde(default = "default_item_levels")]
    pub item_levels: u32,
    /// Explicit pmf pair overriding the mass-transfer construction, for
    /// gaps with structure inside coarse cells.
    #[serde(default)]
    pub pmf_override: Option<PmfPair>,
}

const BASE_WORDS: usize = 24;
const NOISE_SPAN: usize = 6;

const WORD_POOL: [&str; 48] = [
    "the", "answer", "shows", "a", "clear", "method", "for", "this", "task", "and", "gives",
    "context", "with", "detail", "first", "we", "note", "that", "each", "step", "follows", "from",
    "simple", "rules", "then", "result", "holds", "in", "every", "case", "it", "also", "covers",
    "common", "errors", "people", "make", "when", "they", "apply", "idea", "to", "new", "data",
    "model", "works", "well", "here",
];

const DECOY_POOL: [&str; 8] = [
    "may", "possibly", "however", "moreover", "perhaps", "likely", "roughly", "therefore",
];

const TOPIC_POOL: [&str; 10] = [
    "sorting lists", "ocean tides", "tax rules", "garden care", "bird migration",
    "engine repair", "bread baking", "map reading", "star charts", "river flow",
];

fn make_text(rng: &mut ChaCha8Rng, target_words: usize, feature_noise: f64) -> String {
    let target = target_words.max(1);
    let mut words_written = 0;
    let mut sentences: Vec<String> = Vec::new();
    while words_written < target {
        let len = rng.random_range(5..=11).min(target - words_written).max(1);
        let mut words: Vec<&str> = (0..len)
            .map(|_| {
                if feature_noise > 0.0 && rng.random::<f64>() < feature_noise {
                    DECOY_POOL[rng.random_range(0..DECOY_POOL.len())]
                } else {
                    WORD_POOL[rng.random_range(0..WORD_POOL.len())]
                }
            })
            .collect();
        let mut first = words[0].to_string();
        if let Some(c) = first.get_mut(0..1) {
            c.make_ascii_uppercase();
        }
        let rest = words.split_off(1);
        let mut sentence = first;
        for word in rest {
            sentence.push(' ');
            sentence.push_str(word);
        }
        sentence.push('.');
        words_written += len;
        sentences.push(sentence);
    }
    sentences.join(" ")
}

struct GridShape {
    scale: ScaleSpec,
    min: i64,
    levels: usize,
}

fn grid_shape(cfg: &SynthConfig) -> Result<GridShape, TheoryError> {
    match cfg.spec {
        JudgmentSpecTheory::Pointwise { levels } => {
            if levels < 2 {
                return Err(TheoryError::InvalidSpec("need at least 2 levels".into()));
            }
            let dims = (0..cfg.dims)
                .map(|i| DimScale {
                    name: format!("dim{i}"),
                    min: 0,
                    max: i64::from(levels) - 1,
                    step: 1,
                })
                .collect();
            Ok(GridShape {
                scale: ScaleSpec::pointwise(dims),
                min: 0,
                levels: levels as usize,
            })
        }
        JudgmentSpecTheory::Pairwise { superiority_levels } => {
            if cfg.dims != 1 {
                return Err(TheoryError::InvalidSpec(
                    "pairwise corpora have a single dimension".into(),
                ));
            }
            Ok(GridShape {
                scale: ScaleSpec::pairwise(superiority_levels),
                min: -i64::from(superiority_levels),
                levels: (2 * superiority_levels + 1) as usize,
            })
        }
        JudgmentSpecTheory::Listwise { k_items, .. } => {
            if cfg.dims != 1 {
                return Err(TheoryError::InvalidSpec(
                    "listwise corpora have a single dimension".into(),
                ));
            }
            if cfg.item_levels < 2 {
                return Err(TheoryError::InvalidSpec("need at least 2 item levels".into()));
            }
            Ok(GridShape {
                scale: ScaleSpec::listwise(
                    DimScale {
                        name: "relevance".into(),
                        min: 1,
                        max: i64::from(cfg.item_levels),
                        step: 1,
                    },
                    k_items,
                ),
                min: 1,
                levels: cfg.item_levels as usize,
            })
        }
    }
}

fn draw_level(rng: &mut ChaCha8Rng, pmf: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (idx, &p) in pmf.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return idx;
        }
    }
    pmf.len() - 1
}

fn llm_words(cfg: &SynthConfig, norm: f64) -> usize {
    BASE_WORDS + (cfg.length_bias_words * norm).round() as usize
}

/// Generate a labeled synthetic dataset; byte-identical for a fixed
/// config (per-instance counter-based random streams).
pub fn synth_generate(cfg: &SynthConfig) -> Result<Dataset, TheoryError> {
    if cfg.n_instances < cfg.group_size || cfg.group_size == 0 {
        return Err(TheoryError::InvalidSpec(
            "need at least one full group per label".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.feature_noise) {
        return Err(TheoryError::InvalidSpec("feature_noise must lie in [0, 1]".into()));
    }
    if cfg.dims == 0 {
        return Err(TheoryError::InvalidSpec("dims must be at least 1".into()));
    }
    let shape = grid_shape(cfg)?;
    let pmfs = match &cfg.pmf_override {
        Some(pair) => {
            if pair.human.len() != shape.levels || pair.llm.len() != shape.levels {
                return Err(TheoryError::SupportMismatch(pair.human.len(), shape.levels));
            }
            super::tv_distance(&pair.human, &pair.llm)?;
            pair.clone()
        }
        None => shifted_pmf_pair(shape.levels, cfg.target_delta)?,
    };
    let norm_of = |idx: usize| idx as f64 / (shape.levels - 1) as f64;
    let mut instances = Vec::with_capacity(cfg.n_instances * 2);
    for (label_idx, label) in [Label::Human, Label::Llm].into_iter().enumerate() {
        let pmf = if label == Label::Human {
            &pmfs.human
        } else {
            &pmfs.llm
        };
        for i in 0..cfg.n_instances {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(((label_idx as u64) << 32) | i as u64);
            let topic = TOPIC_POOL[rng.random_range(0..TOPIC_POOL.len())];
            let prompt = format!("Question {i}: please explain {topic}.");
            let human_len = |rng: &mut ChaCha8Rng| BASE_WORDS + rng.random_range(0..=NOISE_SPAN);
            let (score, responses) = match cfg.spec {
                JudgmentSpecTheory::Pointwise { .. } => {
                    let levels: Vec<usize> =
                        (0..cfg.dims).map(|_| draw_level(&mut rng, pmf)).collect();
                    let norm = levels.iter().map(|&l| norm_of(l)).sum::<f64>() / cfg.dims as f64;
                    let words = if label == Label::Llm {
                        llm_words(cfg, norm) + rng.random_range(0..=NOISE_SPAN)
                    } else {
                        human_len(&mut rng)
                    };
                    let text = make_text(&mut rng, words, cfg.feature_noise);
                    let dims: BTreeMap<String, f64> = levels
                        .iter()
                        .enumerate()
                        .map(|(d, &l)| (format!("dim{d}"), (shape.min + l as i64) as f64))
                        .collect();
                    (JudgmentScore::Pointwise { dims }, vec![text])
                }
                JudgmentSpecTheory::Pairwise { .. } => {
                    let level = draw_level(&mut rng, pmf);
                    let norm = norm_of(level);
                    let (w1, w2) = if label == Label::Llm {
                        (
                            BASE_WORDS
                                + (cfg.length_bias_words * (1.0 - norm)).round() as usize
                                + rng.random_range(0..=NOISE_SPAN),
                            llm_words(cfg, norm) + rng.random_range(0..=NOISE_SPAN),
                        )
                    } else {
                        (human_len(&mut rng), human_len(&mut rng))
                    };
                    let r1 = make_text(&mut rng, w1, cfg.feature_noise);
                    let r2 = make_text(&mut rng, w2, cfg.feature_noise);
                    (
                        JudgmentScore::Pairwise {
                            pair: shape.min + level as i64,
                        },
                        vec![r1, r2],
                    )
                }
                JudgmentSpecTheory::Listwise { k_items, .. } => {
                    let levels: Vec<usize> =
                        (0..k_items).map(|_| draw_level(&mut rng, pmf)).collect();
                    let mut responses = Vec::with_capacity(levels.len());
                    for &level in &levels {
                        let words = if label == Label::Llm {
                            llm_words(cfg, norm_of(level)) + rng.random_range(0..=NOISE_SPAN)
                        } else {
                            human_len(&mut rng)
                        };
                        responses.push(make_text(&mut rng, words, cfg.feature_noise));
                    }
                    let items: Vec<f64> = levels
                        .iter()
                        .map(|&l| (shape.min + l as i64) as f64)
                        .collect();
                    let ranking = canonical_ranking(&items);
                    (JudgmentScore::Listwise { items, ranking }, responses)
                }
            };
            instances.push(LabeledInstance {
                instance: JudgmentInstance {
                    candidate: Candidate {
                        id: format!("synth-{}-{i:06}", label.as_str()),
                        prompt: Some(prompt),
                        responses,
                        meta: BTreeMap::new(),
                    },
                    score,
                },
                label,
                judge: match label {
                    Label::Llm => Some("synth-judge".to_string()),
                    _ => None,
                },
            });
        }
    }
    let outcome = regroup(&instances, cfg.group_size, cfg.seed)?;
    Ok(Dataset::new(outcome.groups, shape.scale)?)
}

#[cfg(test)]
mod tests {
    use super::super::{estimate_tv, judgment_samples, tv_distance};
    use super::*;
    use crate::data::save_dataset;

    #[test]
    fn zero_delta_gives_identical_pmfs() {
        let pair = shifted_pmf_pair(5, 0.0).unwrap();
        assert_eq!(pair.human, pair.llm);
        assert_eq!(tv_distance(&pair.human, &pair.llm).unwrap(), 0.0);
    }

    #[test]
    fn constructed_tv_matches_target_exactly() {
        for (levels, delta) in [(5usize, 0.3), (7, 0.2), (2, 0.5), (9, 0.45)] {
            let pair = shifted_pmf_pair(levels, delta).unwrap();
            let tv = tv_distance(&pair.human, &pair.llm).unwrap();
            assert!((tv - delta).abs() < 1e-12, "L={levels} delta={delta} tv={tv}");
        }
    }

    #[test]
    fn unrealizable_delta_is_rejected() {
        // uniform over 5 levels: lower 3 cells hold 0.6
        assert!(matches!(
            shifted_pmf_pair(5, 0.7),
            Err(TheoryError::UnrealizableDelta { .. })
        ));
    }

    fn pointwise_cfg() -> SynthConfig {
        SynthConfig {
            spec: JudgmentSpecTheory::Pointwise { levels: 5 },
            dims: 2,
            target_delta: 0.3,
            n_instances: 40,
            group_size: 4,
            seed: 11,
            length_bias_words: 0.0,
            feature_noise: 0.1,
            item_levels: 4,
            pmf_override: None,
        }
    }

    #[test]
    fn same_seed_gives_byte_identical_datasets() {
        let dataset_a = synth_generate(&pointwise_cfg()).unwrap();
        let dataset_b = synth_generate(&pointwise_cfg()).unwrap();
        assert_eq!(dataset_a, dataset_b);
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        save_dataset(&dataset_a, &a).unwrap();
        save_dataset(&dataset_b, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let mut other = pointwise_cfg();
        other.seed = 12;
        assert_ne!(synth_generate(&other).unwrap(), dataset_a);
    }

    #[test]
    fn groups_are_label_pure_and_sized() {
        let dataset = synth_generate(&pointwise_cfg()).unwrap();
        assert_eq!(dataset.groups.len(), 20);
        assert!(dataset.groups.iter().all(|g| g.instances.len() == 4));
        let llm_groups = dataset
            .groups
            .iter()
            .filter(|g| g.label == Label::Llm)
            .count();
        assert_eq!(llm_groups, 10);
    }

    #[test]
    fn empirical_tv_approaches_target() {
        let mut cfg = pointwise_cfg();
        cfg.n_instances = 4000;
        cfg.dims = 1;
        cfg.group_size = 1;
        let dataset = synth_generate(&cfg).unwrap();
        let (human, llm) = judgment_samples(&dataset);
        let estimate = estimate_tv(&human, &llm, &dataset.scale).unwrap();
        assert!(
            (estimate.mean - 0.3).abs() < 0.05,
            "estimated {} for target 0.3",
            estimate.mean
        );
    }

    #[test]
    fn pairwise_and_listwise_generate_valid_datasets() {
        let pairwise = SynthConfig {
            spec: JudgmentSpecTheory::Pairwise { superiority_levels: 3 },
            dims: 1,
            target_delta: 0.2,
            n_instances: 12,
            group_size: 3,
            seed: 5,
            length_bias_words: 20.0,
            feature_noise: 0.0,
            item_levels: 4,
            pmf_override: None,
        };
        let dataset = synth_generate(&pairwise).unwrap();
        assert_eq!(dataset.scale.pair_levels_x, Some(3));
        assert!(dataset.groups.iter().all(|g| g.instances.len() == 3));

        let listwise = SynthConfig {
            spec: JudgmentSpecTheory::Listwise { k_items: 3, use_stirling: false },
            dims: 1,
            target_delta: 0.25,
            n_instances: 9,
            group_size: 3,
            seed: 6,
            length_bias_words: 0.0,
            feature_noise: 0.0,
            item_levels: 4,
            pmf_override: None,
        };
        let dataset = synth_generate(&listwise).unwrap();
        assert_eq!(dataset.scale.listwise_items, Some(3));
    }

    #[test]
    fn length_bias_plants_longer_llm_responses() {
        let mut cfg = pointwise_cfg();
        cfg.dims = 1;
        cfg.length_bias_words = 40.0;
        cfg.n_instances = 200;
        let dataset = synth_generate(&cfg).unwrap();
        let mean_words = |label: Label| {
            let mut total = 0usize;
            let mut count = 0usize;
            for g in dataset.groups.iter().filter(|g| g.label == label) {
                for inst in &g.instances {
                    total += inst.candidate.responses[0].split_whitespace().count();
                    count += 1;
                }
            }
            total as f64 / count as f64
        };
        assert!(mean_words(Label::Llm) > mean_words(Label::Human) + 5.0);
    }

    #[test]
    fn pmf_override_is_validated_and_used() {
        let mut cfg = pointwise_cfg();
        cfg.dims = 1;
        cfg.pmf_override = Some(PmfPair {
            human: vec![0.2; 5],
            llm: vec![0.1, 0.1, 0.2, 0.3, 0.3],
        });
        assert!(synth_generate(&cfg).is_ok());
        cfg.pmf_override = Some(PmfPair {
            human: vec![0.5; 2],
            llm: vec![0.5; 2],
        });
        assert!(matches!(
            synth_generate(&cfg),
            Err(TheoryError::SupportMismatch(2, 5))
        ));
    }
}
