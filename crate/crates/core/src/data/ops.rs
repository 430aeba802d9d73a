//! Group manipulation: regrouping, scale coarsening, dimension
//! projection, and stratified splitting. These drive the group-size,
//! rating-scale, and dimensionality sweeps.

use super::{
    canonical_ranking, DataError, Dataset, DimScale, JudgmentGroup, JudgmentInstance,
    JudgmentScore, Label, ScaleSpec,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// An instance carrying its source label, before grouping.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub instance: JudgmentInstance,
    pub label: Label,
    pub judge: Option<String>,
}

/// Result of `regroup`: the groups plus how many leftover instances were
/// dropped (count mod k per label; padding would fabricate judgments).
#[derive(Debug, Clone)]
pub struct RegroupOutcome {
    pub groups: Vec<JudgmentGroup>,
    pub dropped: usize,
}

fn label_stream(label: Label) -> u64 {
    match label {
        Label::Human => 0,
        Label::Llm => 1,
        Label::Unknown => 2,
    }
}

/// Partition instances by label, shuffle each partition deterministically,
/// and chunk into label-pure groups of exactly `k`.
pub fn regroup(
    instances: &[LabeledInstance],
    k: usize,
    seed: u64,
) -> Result<RegroupOutcome, DataError> {
    if k == 0 {
        return Err(DataError::InvalidGroupSize);
    }
    if let Some(first) = instances.first() {
        let ty = first.instance.judgment_type();
        if let Some(other) = instances
            .iter()
            .find(|i| i.instance.judgment_type() != ty)
        {
            return Err(DataError::MixedTypes(ty, other.instance.judgment_type()));
        }
    }
    let mut partitions: BTreeMap<u64, (Label, Vec<&LabeledInstance>)> = BTreeMap::new();
    for labeled in instances {
        partitions
            .entry(label_stream(labeled.label))
            .or_insert_with(|| (labeled.label, Vec::new()))
            .1
            .push(labeled);
    }
    let mut groups = Vec::new();
    let mut dropped = 0;
    for (stream, (label, mut members)) in partitions {
        if members.len() < k {
            return Err(DataError::TooFewInstances {
                label: label.as_str().into(),
                available: members.len(),
                k,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        members.shuffle(&mut rng);
        let whole = members.len() / k * k;
        dropped += members.len() - whole;
        for (idx, chunk) in members[..whole].chunks(k).enumerate() {
            // a group gets a judge id only when all its instances agree
            let judge = chunk
                .iter()
                .map(|m| m.judge.clone())
                .reduce(|a, b| if a == b { a } else { None })
                .flatten();
            groups.push(JudgmentGroup {
                group_id: format!("{}-k{}-{:05}", label.as_str(), k, idx),
                label,
                judge,
                judgment_type: chunk[0].instance.judgment_type(),
                instances: chunk.iter().map(|m| m.instance.clone()).collect(),
            });
        }
    }
    Ok(RegroupOutcome { groups, dropped })
}

/// Flatten a dataset back to labeled instances (inverse of grouping).
pub fn flatten(dataset: &Dataset) -> Vec<LabeledInstance> {
    dataset
        .groups
        .iter()
        .flat_map(|g| {
            g.instances.iter().map(|i| LabeledInstance {
                instance: i.clone(),
                label: g.label,
                judge: g.judge.clone(),
            })
        })
        .collect()
}

fn map_value(mapping: &BTreeMap<i64, i64>, value: f64) -> Result<f64, DataError> {
    let level = value as i64;
    mapping
        .get(&level)
        .map(|&v| v as f64)
        .ok_or(DataError::MappingIncomplete(level))
}

fn coarse_grid(
    mapping: &BTreeMap<i64, i64>,
    source: impl Iterator<Item = i64>,
) -> Result<(i64, i64, i64), DataError> {
    let mut image = std::collections::BTreeSet::new();
    for level in source {
        let mapped = mapping
            .get(&level)
            .copied()
            .ok_or(DataError::MappingIncomplete(level))?;
        image.insert(mapped);
    }
    let levels: Vec<i64> = image.into_iter().collect();
    if levels.len() < 2 {
        return Err(DataError::MappingBadImage(
            "image must keep at least 2 levels".into(),
        ));
    }
    let step = levels[1] - levels[0];
    if step < 1 || levels.windows(2).any(|w| w[1] - w[0] != step) {
        return Err(DataError::MappingBadImage(format!(
            "image levels {levels:?} are not evenly spaced"
        )));
    }
    Ok((levels[0], *levels.last().unwrap(), step))
}

/// Remap every score level through `mapping`, producing a dataset on the
/// coarser grid. The mapping must be total over the source grid and its
/// image must itself form a valid grid.
pub fn coarsen_scale(
    dataset: &Dataset,
    mapping: &BTreeMap<i64, i64>,
) -> Result<Dataset, DataError> {
    let scale = &dataset.scale;
    let new_scale = match scale.judgment_type() {
        super::JudgmentType::Pairwise => {
            let x = scale.pair_levels_x.unwrap() as i64;
            let (min, max, step) = coarse_grid(mapping, -x..=x)?;
            if step != 1 || min != -max || max < 1 {
                return Err(DataError::MappingBadImage(format!(
                    "pairwise image must be a symmetric unit grid -x..x, got \
                     {min}..{max} step {step}"
                )));
            }
            ScaleSpec::pairwise(max as u32)
        }
        _ => {
            let mut dims = Vec::new();
            for dim in &scale.dimensions {
                let (min, max, step) = coarse_grid(mapping, dim.levels())?;
                dims.push(DimScale {
                    name: dim.name.clone(),
                    min,
                    max,
                    step,
                });
            }
            ScaleSpec {
                dimensions: dims,
                pair_levels_x: None,
                listwise_items: scale.listwise_items,
            }
        }
    };
    let mut groups = dataset.groups.clone();
    for group in &mut groups {
        for instance in &mut group.instances {
            match &mut instance.score {
                JudgmentScore::Pointwise { dims } => {
                    for value in dims.values_mut() {
                        *value = map_value(mapping, *value)?;
                    }
                }
                JudgmentScore::Pairwise { pair } => {
                    *pair = map_value(mapping, *pair as f64)? as i64;
                }
                JudgmentScore::Listwise { items, ranking } => {
                    for value in items.iter_mut() {
                        *value = map_value(mapping, *value)?;
                    }
                    // merged levels can create new ties; re-canonicalize
                    *ranking = canonical_ranking(items);
                }
            }
        }
    }
    Dataset::new(groups, new_scale)
}

/// Restrict pointwise judgments to a subset of dimensions, in dataset
/// order. Projecting to the full set is the identity for any type.
pub fn project_dimensions(dataset: &Dataset, dims: &[String]) -> Result<Dataset, DataError> {
    if dims.is_empty() {
        return Err(DataError::EmptyProjection);
    }
    for name in dims {
        if !dataset.dimension_names.contains(name) {
            return Err(DataError::UnknownDimension(name.clone()));
        }
    }
    let keep: Vec<&String> = dataset
        .dimension_names
        .iter()
        .filter(|n| dims.contains(n))
        .collect();
    if keep.len() == dataset.dimension_names.len() {
        return Ok(dataset.clone());
    }
    match dataset.judgment_type() {
        super::JudgmentType::Pointwise => {}
        other => {
            return Err(DataError::InvalidScale(format!(
                "cannot drop the only dimension of a {other} dataset"
            )))
        }
    }
    let new_scale = ScaleSpec::pointwise(
        dataset
            .scale
            .dimensions
            .iter()
            .filter(|d| keep.iter().any(|k| **k == d.name))
            .cloned()
            .collect(),
    );
    let mut groups = dataset.groups.clone();
    for group in &mut groups {
        for instance in &mut group.instances {
            if let JudgmentScore::Pointwise { dims } = &mut instance.score {
                dims.retain(|name, _| keep.contains(&name));
            }
        }
    }
    Dataset::new(groups, new_scale)
}

/// Stratified group-level split into (train, test). No group straddles
/// the boundary; label proportions are preserved within one group.
pub fn split_dataset(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::BadFraction(test_fraction));
    }
    let mut strata: BTreeMap<u64, (Label, Vec<usize>)> = BTreeMap::new();
    for (idx, group) in dataset.groups.iter().enumerate() {
        strata
            .entry(label_stream(group.label))
            .or_insert_with(|| (group.label, Vec::new()))
            .1
            .push(idx);
    }
    let mut test_indices = std::collections::BTreeSet::new();
    for (stream, (label, mut indices)) in strata {
        let n = indices.len();
        let n_test = (test_fraction * n as f64).round() as usize;
        if label != Label::Unknown && (n_test == 0 || n_test == n) {
            return Err(DataError::TooFewGroups {
                label: label.as_str().into(),
                count: n,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        indices.shuffle(&mut rng);
        test_indices.extend(indices.into_iter().take(n_test));
    }
    let mut train_groups = Vec::new();
    let mut test_groups = Vec::new();
    for (idx, group) in dataset.groups.iter().enumerate() {
        if test_indices.contains(&idx) {
            test_groups.push(group.clone());
        } else {
            train_groups.push(group.clone());
        }
    }
    Ok((
        Dataset::new(train_groups, dataset.scale.clone())?,
        Dataset::new(test_groups, dataset.scale.clone())?,
    ))
}
