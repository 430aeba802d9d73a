//! Detectability theory: effective scale, effective observation budget,
//! total-variation distance, the detectability index, and fitting its
//! dataset-dependent constant from observed runs.
//!
//! All logarithms are natural (the budget is measured in nats).

mod synth;

pub use synth::{shifted_pmf_pair, synth_generate, PmfPair, SynthConfig};

use crate::data::{DataError, Dataset, JudgmentScore, JudgmentType, Label, ScaleSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("invalid judgment spec: {0}")]
    InvalidSpec(String),
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("distributions have different support sizes: {0} vs {1}")]
    SupportMismatch(usize, usize),
    #[error("distribution does not sum to 1 (sum = {0})")]
    NotNormalized(f64),
    #[error("sample value {0} is off the scale grid")]
    OffGrid(f64),
    #[error("need at least one sample per side")]
    EmptySamples,
    #[error("target delta {target} exceeds transferable mass {max}")]
    UnrealizableDelta { target: f64, max: f64 },
    #[error("no usable points: need observed_det in (0,1) and delta > 0")]
    NoUsablePoints,
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Shape of one judgment for the theory: enough to derive the outcome
/// cardinality S.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum JudgmentSpecTheory {
    Pointwise {
        levels: u32,
    },
    Pairwise {
        superiority_levels: u32,
    },
    Listwise {
        k_items: u32,
        #[serde(default)]
        use_stirling: bool,
    },
}

impl JudgmentSpecTheory {
    pub fn judgment_type(&self) -> JudgmentType {
        match self {
            JudgmentSpecTheory::Pointwise { .. } => JudgmentType::Pointwise,
            JudgmentSpecTheory::Pairwise { .. } => JudgmentType::Pairwise,
            JudgmentSpecTheory::Listwise { .. } => JudgmentType::Listwise,
        }
    }
}

/// Effective scale S with its natural log, which is what every formula
/// actually consumes. For listwise specs beyond 20 items S itself
/// overflows while ln S stays finite via Stirling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveScale {
    pub s: f64,
    pub ln_s: f64,
}

/// Outcome cardinality of one judgment: L levels, 2x+1 pairwise
/// outcomes, or k! full rankings (exact in wide integers up to k = 20,
/// Stirling's ln k! ~ k ln k - k beyond when enabled).
pub fn effective_scale(spec: &JudgmentSpecTheory) -> Result<EffectiveScale, TheoryError> {
    match *spec {
        JudgmentSpecTheory::Pointwise { levels } => {
            if levels < 2 {
                return Err(TheoryError::InvalidSpec("need at least 2 levels".into()));
            }
            let s = f64::from(levels);
            Ok(EffectiveScale { s, ln_s: s.ln() })
        }
        JudgmentSpecTheory::Pairwise { superiority_levels } => {
            if superiority_levels < 1 {
                return Err(TheoryError::InvalidSpec(
                    "need at least 1 superiority level per side".into(),
                ));
            }
            let s = f64::from(2 * superiority_levels + 1);
            Ok(EffectiveScale { s, ln_s: s.ln() })
        }
        JudgmentSpecTheory::Listwise {
            k_items,
            use_stirling,
        } => {
            if k_items < 2 {
                return Err(TheoryError::InvalidSpec("need at least 2 items".into()));
            }
            if k_items <= 20 {
                let factorial: u128 = (2..=u128::from(k_items)).product();
                let ln_s = (2..=u128::from(k_items)).map(|i| (i as f64).ln()).sum();
                Ok(EffectiveScale {
                    s: factorial as f64,
                    ln_s,
                })
            } else if use_stirling {
                let k = f64::from(k_items);
                let ln_s = k * k.ln() - k;
                Ok(EffectiveScale { s: ln_s.exp(), ln_s })
            } else {
                Err(TheoryError::InvalidSpec(
                    "k! is only exact up to 20 items; enable use_stirling beyond".into(),
                ))
            }
        }
    }
}

/// Effective observation budget n_eff = m * d * ln S in nats.
pub fn effective_budget(m: usize, d: usize, scale: &EffectiveScale) -> Result<f64, TheoryError> {
    if m < 1 || d < 1 {
        return Err(TheoryError::Domain(
            "group size and dimensions must be at least 1".into(),
        ));
    }
    Ok(m as f64 * d as f64 * scale.ln_s)
}

/// Budget of a mixed-type group: sum of per-instance budgets.
pub fn effective_budget_mixed(
    parts: &[(usize, usize, EffectiveScale)],
) -> Result<f64, TheoryError> {
    parts
        .iter()
        .map(|(m, d, scale)| effective_budget(*m, *d, scale))
        .sum()
}

/// Total variation distance between two discrete distributions on the
/// same support: half the L1 distance, in [0, 1].
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64, TheoryError> {
    if p.len() != q.len() {
        return Err(TheoryError::SupportMismatch(p.len(), q.len()));
    }
    for side in [p, q] {
        if side.iter().any(|&v| v.is_nan() || v < 0.0) {
            return Err(TheoryError::NotNormalized(f64::NAN));
        }
        let sum: f64 = side.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TheoryError::NotNormalized(sum));
        }
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Per-dimension empirical TV estimates and their mean, the scalar
/// delta used by the detectability index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub per_dimension: Vec<f64>,
    pub mean: f64,
}

struct Grid {
    min: i64,
    step: i64,
    levels: usize,
}

impl Grid {
    fn index_of(&self, value: f64) -> Result<usize, TheoryError> {
        if !value.is_finite() || value.fract() != 0.0 {
            return Err(TheoryError::OffGrid(value));
        }
        let v = value as i64;
        let offset = v - self.min;
        if offset < 0 || offset % self.step != 0 {
            return Err(TheoryError::OffGrid(value));
        }
        let idx = (offset / self.step) as usize;
        if idx >= self.levels {
            return Err(TheoryError::OffGrid(value));
        }
        Ok(idx)
    }
}

fn grids_of(scale: &ScaleSpec) -> Vec<Grid> {
    match scale.judgment_type() {
        JudgmentType::Pairwise => {
            let x = scale.pair_levels_x.unwrap_or(1) as i64;
            vec![Grid {
                min: -x,
                step: 1,
                levels: (2 * x + 1) as usize,
            }]
        }
        _ => scale
            .dimensions
            .iter()
            .map(|d| Grid {
                min: d.min,
                step: d.step,
                levels: d.level_count() as usize,
            })
            .collect(),
    }
}

/// Empirical TV between the human and LLM score histograms over the
/// scale grid, one estimate per dimension plus their mean.
///
/// Each sample is a d-vector of on-grid scores.
pub fn estimate_tv(
    human_samples: &[Vec<f64>],
    llm_samples: &[Vec<f64>],
    scale: &ScaleSpec,
) -> Result<TvEstimate, TheoryError> {
    if human_samples.is_empty() || llm_samples.is_empty() {
        return Err(TheoryError::EmptySamples);
    }
    let grids = grids_of(scale);
    let mut per_dimension = Vec::with_capacity(grids.len());
    for (dim, grid) in grids.iter().enumerate() {
        let histogram = |samples: &[Vec<f64>]| -> Result<Vec<f64>, TheoryError> {
            let mut counts = vec![0.0; grid.levels];
            for sample in samples {
                let value = *sample
                    .get(dim)
                    .ok_or(TheoryError::SupportMismatch(sample.len(), grids.len()))?;
                counts[grid.index_of(value)?] += 1.0;
            }
            let n = samples.len() as f64;
            Ok(counts.into_iter().map(|c| c / n).collect())
        };
        let p = histogram(human_samples)?;
        let q = histogram(llm_samples)?;
        per_dimension.push(tv_distance(&p, &q)?);
    }
    let mean = per_dimension.iter().sum::<f64>() / per_dimension.len() as f64;
    Ok(TvEstimate {
        per_dimension,
        mean,
    })
}

/// Pull per-instance score vectors out of a dataset, split by label.
/// Listwise item scores pool as independent single-dimension samples.
pub fn judgment_samples(dataset: &Dataset) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut human = Vec::new();
    let mut llm = Vec::new();
    for group in &dataset.groups {
        let sink = match group.label {
            Label::Human => &mut human,
            Label::Llm => &mut llm,
            Label::Unknown => continue,
        };
        for instance in &group.instances {
            match &instance.score {
                JudgmentScore::Pointwise { dims } => {
                    sink.push(
                        dataset
                            .dimension_names
                            .iter()
                            .map(|n| dims[n])
                            .collect::<Vec<f64>>(),
                    );
                }
                JudgmentScore::Pairwise { pair } => sink.push(vec![*pair as f64]),
                JudgmentScore::Listwise { items, .. } => {
                    for &item in items {
                        sink.push(vec![item]);
                    }
                }
            }
        }
    }
    (human, llm)
}

/// Detectability index Det = 1 - exp(-beta * m * d * ln S * delta^2).
pub fn detectability_index(
    beta: f64,
    m: usize,
    d: usize,
    scale: &EffectiveScale,
    delta: f64,
) -> Result<f64, TheoryError> {
    if beta <= 0.0 {
        return Err(TheoryError::Domain("beta must be positive".into()));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(TheoryError::Domain("delta must lie in [0, 1]".into()));
    }
    if scale.ln_s < std::f64::consts::LN_2 {
        return Err(TheoryError::Domain("effective scale must be at least 2".into()));
    }
    let budget = effective_budget(m, d, scale)?;
    Ok(1.0 - (-beta * budget * delta * delta).exp())
}

/// One observation for the beta fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetPoint {
    pub m: usize,
    pub d: usize,
    pub ln_s: f64,
    pub delta: f64,
    pub observed_det: f64,
}

/// Least squares of -ln(1 - det) against n_eff * delta^2 through the
/// origin. Points with det outside (0, 1) or delta = 0 are unusable;
/// at least one usable point is required.
pub fn fit_beta(points: &[DetPoint]) -> Result<f64, TheoryError> {
    let mut sum_xy = 0.0;
    let mut sum_xx = 0.0;
    let mut usable = 0;
    for point in points {
        if !(point.observed_det > 0.0 && point.observed_det < 1.0)
            || point.delta.is_nan()
            || point.delta <= 0.0
        {
            continue;
        }
        let x = point.m as f64 * point.d as f64 * point.ln_s * point.delta * point.delta;
        let y = -(1.0 - point.observed_det).ln();
        sum_xy += x * y;
        sum_xx += x * x;
        usable += 1;
    }
    if usable == 0 || sum_xx == 0.0 {
        return Err(TheoryError::NoUsablePoints);
    }
    Ok(sum_xy / sum_xx)
}
