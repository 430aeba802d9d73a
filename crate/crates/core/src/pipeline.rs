//! Group-level detection: sum aggregation of instance logits,
//! thresholding, evaluation metrics, the repeated-run protocol, and the
//! bias-quantification report.

use crate::classifier::{train, ModelError, TrainConfig, TrainedModel};
use crate::features::{Block, FeatureMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot aggregate an empty group")]
    EmptyGroup,
    #[error("non-finite logit in group")]
    NonFiniteLogit,
    #[error("predictions and labels differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("AUROC needs at least one positive and one negative example")]
    SingleClassMetric,
    #[error("test matrix row {0} has no label")]
    UnlabeledGroup(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Sum of instance logits, accumulated left to right.
pub fn aggregate_group(logits: &[f64]) -> Result<f64, PipelineError> {
    if logits.is_empty() {
        return Err(PipelineError::EmptyGroup);
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(PipelineError::NonFiniteLogit);
    }
    Ok(logits.iter().fold(0.0, |acc, z| acc + z))
}

/// Group decision: LLM (1) iff aggregate >= tau. The boundary is
/// inclusive, and tau lives on the logit scale (0 corresponds to
/// probability one half).
pub fn classify_group(aggregate: f64, tau: f64) -> u8 {
    u8::from(aggregate >= tau)
}

/// F1 of the positive (LLM) class: 2PR / (P + R), 0 when P + R = 0.
pub fn f1_score(predictions: &[u8], labels: &[u8]) -> Result<f64, PipelineError> {
    if predictions.len() != labels.len() {
        return Err(PipelineError::LengthMismatch(
            predictions.len(),
            labels.len(),
        ));
    }
    if predictions.is_empty() {
        return Err(PipelineError::LengthMismatch(0, 0));
    }
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fne = 0.0;
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (1, 1) => tp += 1.0,
            (1, 0) => fp += 1.0,
            (0, 1) => fne += 1.0,
            _ => {}
        }
    }
    let precision = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
    let recall = if tp + fne == 0.0 { 0.0 } else { tp / (tp + fne) };
    if precision + recall == 0.0 {
        Ok(0.0)
    } else {
        Ok(2.0 * precision * recall / (precision + recall))
    }
}

/// AUROC by the Mann-Whitney statistic with half credit for ties,
/// computed sort-based in O(n log n). The numerator is kept in integers
/// (2 * concordant + tied), so the result agrees exactly with the
/// O(n^2) pair-counting definition.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64, PipelineError> {
    if scores.len() != labels.len() {
        return Err(PipelineError::LengthMismatch(scores.len(), labels.len()));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(PipelineError::SingleClassMetric);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut numerator2: u64 = 0; // 2 * concordant + tied
    let mut negatives_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut group_pos = 0u64;
        let mut group_neg = 0u64;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                group_pos += 1;
            } else {
                group_neg += 1;
            }
            j += 1;
        }
        numerator2 += 2 * group_pos * negatives_below + group_pos * group_neg;
        negatives_below += group_neg;
        i = j;
    }
    Ok(numerator2 as f64 / (2 * pos * neg) as f64)
}

/// Scores and decision for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub group_id: String,
    pub instance_logits: Vec<f64>,
    pub aggregate: f64,
    pub prediction: u8,
    pub true_label: Option<u8>,
}

/// Score every group of a matrix with a trained model. Rows are grouped
/// by their group id, in first-appearance order.
pub fn score_groups(
    model: &TrainedModel,
    matrix: &FeatureMatrix,
    tau: f64,
) -> Result<Vec<GroupScore>, PipelineError> {
    let logits = model.predict_matrix(matrix)?;
    let mut order: Vec<&str> = Vec::new();
    let mut by_group: std::collections::HashMap<&str, (Vec<f64>, Option<u8>)> =
        std::collections::HashMap::new();
    for (row, &logit) in matrix.rows.iter().zip(&logits) {
        let entry = by_group.entry(&row.group_id).or_insert_with(|| {
            order.push(&row.group_id);
            (Vec::new(), row.label)
        });
        entry.0.push(logit);
    }
    order
        .into_iter()
        .map(|group_id| {
            let (instance_logits, true_label) = by_group.remove(group_id).unwrap();
            let aggregate = aggregate_group(&instance_logits)?;
            Ok(GroupScore {
                group_id: group_id.to_string(),
                prediction: classify_group(aggregate, tau),
                aggregate,
                instance_logits,
                true_label,
            })
        })
        .collect()
}

/// Pick the logit threshold maximizing F1 over the given group scores;
/// ties resolve to the smallest candidate. Candidates are the observed
/// aggregates (the boundary is inclusive) plus one value below them all.
pub fn calibrate_tau(aggregates: &[f64], labels: &[u8]) -> Result<f64, PipelineError> {
    if aggregates.len() != labels.len() || aggregates.is_empty() {
        return Err(PipelineError::LengthMismatch(
            aggregates.len(),
            labels.len(),
        ));
    }
    let mut candidates: Vec<f64> = aggregates.to_vec();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    candidates.dedup();
    candidates.insert(0, candidates[0] - 1.0);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &tau in &candidates {
        let predictions: Vec<u8> = aggregates.iter().map(|&a| classify_group(a, tau)).collect();
        let f1 = f1_score(&predictions, labels)?;
        if f1 > best.0 {
            best = (f1, tau);
        }
    }
    Ok(best.1)
}

/// Metrics for one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRun {
    pub seed: u64,
    pub f1: f64,
    pub auroc: f64,
}

/// Per-run metrics plus their means over the repeat protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub runs: Vec<DetectionRun>,
    pub mean_f1: f64,
    pub mean_auroc: f64,
    pub n_groups: usize,
    pub tau: f64,
}

/// Train and evaluate once per seed: fit on the training matrix, score
/// the test groups, compute F1 at tau and AUROC on the aggregates.
pub fn run_detection(
    train_matrix: &FeatureMatrix,
    test_matrix: &FeatureMatrix,
    cfg: &TrainConfig,
    seeds: &[u64],
    tau: f64,
) -> Result<MetricsReport, PipelineError> {
    let mut runs = Vec::with_capacity(seeds.len());
    let mut n_groups = 0;
    for &seed in seeds {
        let model = train(train_matrix, &cfg.with_seed(seed))?;
        let (run, groups) = evaluate_model(&model, test_matrix, tau, seed)?;
        n_groups = groups;
        runs.push(run);
    }
    let n = runs.len() as f64;
    Ok(MetricsReport {
        mean_f1: runs.iter().map(|r| r.f1).sum::<f64>() / n,
        mean_auroc: runs.iter().map(|r| r.auroc).sum::<f64>() / n,
        runs,
        n_groups,
        tau,
    })
}

/// Score one trained model against a labeled test matrix.
pub fn evaluate_model(
    model: &TrainedModel,
    test_matrix: &FeatureMatrix,
    tau: f64,
    seed: u64,
) -> Result<(DetectionRun, usize), PipelineError> {
    let groups = score_groups(model, test_matrix, tau)?;
    let mut predictions = Vec::with_capacity(groups.len());
    let mut aggregates = Vec::with_capacity(groups.len());
    let mut labels = Vec::with_capacity(groups.len());
    for (i, g) in groups.iter().enumerate() {
        let label = g.true_label.ok_or(PipelineError::UnlabeledGroup(i))?;
        predictions.push(g.prediction);
        aggregates.push(g.aggregate);
        labels.push(label);
    }
    Ok((
        DetectionRun {
            seed,
            f1: f1_score(&predictions, &labels)?,
            auroc: auroc(&aggregates, &labels)?,
        },
        groups.len(),
    ))
}

/// One row of the bias report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasEntry {
    pub name: String,
    /// Signed coefficient for logistic models, importance for ensembles.
    pub value: f64,
    pub block: Block,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub entries: Vec<BiasEntry>,
    /// Set when the requested N exceeded the schema length.
    pub clamped: bool,
}

/// Top-N features by absolute value, with block attribution. N is
/// clamped to the schema length.
pub fn bias_report(model: &TrainedModel, n: usize) -> BiasReport {
    let values = model.signed_values();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let clamped = n > values.len();
    let entries = order
        .into_iter()
        .take(n.min(values.len()))
        .map(|i| BiasEntry {
            name: model.schema.entries[i].name.clone(),
            value: values[i],
            block: model.schema.entries[i].block,
        })
        .collect();
    BiasReport { entries, clamped }
}
