//! Bagged CART ensemble with Gini splits and log-odds leaves.
//!
//! Leaves hold log-odds rather than class probabilities so that group
//! evidence can be summed on the additive scale downstream. Candidate
//! thresholds are midpoints between sorted unique values, which removes
//! platform-dependent nondeterminism, and every tree draws from its own
//! counter-based random stream so results are independent of scheduling.

use super::ModelError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const LEAF_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: Vec<Tree>,
    /// Total Gini decrease per feature, normalized to sum 1.
    pub importance: Vec<f64>,
}

/// How many candidate features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubsample {
    Sqrt,
    Fraction(f64),
}

impl FeatureSubsample {
    fn count(self, n_features: usize) -> usize {
        match self {
            FeatureSubsample::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            FeatureSubsample::Fraction(f) => {
                ((f * n_features as f64).round() as usize).clamp(1, n_features)
            }
        }
    }
}

pub struct ForestSettings {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub feature_subsample: FeatureSubsample,
    pub row_subsample: f64,
    pub seed: u64,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

fn leaf_value(pos: usize, total: usize) -> f64 {
    let p = if total == 0 {
        0.5
    } else {
        pos as f64 / total as f64
    };
    ((p + LEAF_EPSILON) / (1.0 - p + LEAF_EPSILON)).ln()
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    settings: &'a ForestSettings,
    n_features: usize,
    sample_total: usize,
    nodes: Vec<Node>,
    importance: &'a mut [f64],
}

struct BestSplit {
    decrease: f64,
    feature: usize,
    threshold: f64,
}

impl<'a> TreeBuilder<'a> {
    /// Returns the index of the built node.
    fn build(&mut self, indices: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let pos = indices.iter().filter(|&&i| self.y[i] == 1).count();
        let total = indices.len();
        let pure = pos == 0 || pos == total;
        if pure || depth >= self.settings.max_depth || total < 2 * self.settings.min_leaf {
            self.nodes.push(Node::Leaf {
                value: leaf_value(pos, total),
            });
            return self.nodes.len() - 1;
        }
        let m = self
            .settings
            .feature_subsample
            .count(self.n_features)
            .min(self.n_features);
        let mut candidates = rand::seq::index::sample(rng, self.n_features, m).into_vec();
        candidates.sort_unstable();
        let mut best = self.best_split(indices, pos, &candidates);
        if best.is_none() {
            // every sampled feature was constant within the node; keep
            // inspecting the remaining features until a valid partition
            // is found, as random-forest splitters do
            for feature in 0..self.n_features {
                if candidates.contains(&feature) {
                    continue;
                }
                best = self.best_split(indices, pos, &[feature]);
                if best.is_some() {
                    break;
                }
            }
        }
        let Some(best) = best else {
            self.nodes.push(Node::Leaf {
                value: leaf_value(pos, total),
            });
            return self.nodes.len() - 1;
        };
        self.importance[best.feature] +=
            (total as f64 / self.sample_total as f64) * best.decrease;
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.x[i][best.feature] <= best.threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 }); // replaced below
        let left = self.build(&left_idx, depth + 1, rng);
        let right = self.build(&right_idx, depth + 1, rng);
        self.nodes[slot] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        slot
    }

    /// Best (feature, midpoint threshold) by Gini decrease over the
    /// candidate features; ties keep the first candidate in feature then
    /// threshold order. Zero-decrease splits are allowed as long as both
    /// children satisfy `min_leaf`; interaction-only signal needs them.
    fn best_split(&self, indices: &[usize], pos: usize, candidates: &[usize]) -> Option<BestSplit> {
        let total = indices.len();
        let parent = gini(pos, total);
        let mut best: Option<BestSplit> = None;
        for &feature in candidates {
            let mut column: Vec<(f64, u8)> = indices
                .iter()
                .map(|&i| (self.x[i][feature], self.y[i]))
                .collect();
            column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
            let mut left_pos = 0usize;
            let mut left_total = 0usize;
            for w in 0..column.len() - 1 {
                left_total += 1;
                left_pos += usize::from(column[w].1 == 1);
                if column[w].0 == column[w + 1].0 {
                    continue;
                }
                let right_total = total - left_total;
                if left_total < self.settings.min_leaf || right_total < self.settings.min_leaf {
                    continue;
                }
                let right_pos = pos - left_pos;
                let weighted = (left_total as f64 * gini(left_pos, left_total)
                    + right_total as f64 * gini(right_pos, right_total))
                    / total as f64;
                let decrease = parent - weighted;
                if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    best = Some(BestSplit {
                        decrease,
                        feature,
                        threshold: (column[w].0 + column[w + 1].0) / 2.0,
                    });
                }
            }
        }
        best
    }
}

/// Train the ensemble on raw (imputed) features.
pub fn train_forest(
    x: &[Vec<f64>],
    y: &[u8],
    settings: &ForestSettings,
) -> Result<ForestParams, ModelError> {
    let positives = y.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(ModelError::SingleClass);
    }
    for (i, row) in x.iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { row: i, feature: j });
        }
    }
    let n = x.len();
    let n_features = x[0].len();
    let n_draw = ((settings.row_subsample * n as f64).round() as usize).clamp(1, n);
    let mut trees = Vec::with_capacity(settings.n_trees);
    let mut importance = vec![0.0; n_features];
    for t in 0..settings.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(t as u64 + 1);
        let sample: Vec<usize> = (0..n_draw).map(|_| rng.random_range(0..n)).collect();
        let mut builder = TreeBuilder {
            x,
            y,
            settings,
            n_features,
            sample_total: n_draw,
            nodes: Vec::new(),
            importance: &mut importance,
        };
        builder.build(&sample, 0, &mut rng);
        trees.push(Tree {
            nodes: builder.nodes,
        });
    }
    let total: f64 = importance.iter().sum();
    if total > 0.0 {
        for v in &mut importance {
            *v /= total;
        }
    } else {
        importance.fill(1.0 / n_features as f64);
    }
    Ok(ForestParams { trees, importance })
}

impl ForestParams {
    /// Mean of leaf log-odds across trees.
    pub fn predict_logit(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        sum / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(n_trees: usize, max_depth: usize, seed: u64) -> ForestSettings {
        ForestSettings {
            n_trees,
            max_depth,
            min_leaf: 1,
            feature_subsample: FeatureSubsample::Sqrt,
            row_subsample: 1.0,
            seed,
        }
    }

    fn xor_data() -> (Vec<Vec<f64>>, Vec<u8>) {
        (
            vec![
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
            ],
            vec![0, 1, 1, 0],
        )
    }

    #[test]
    fn xor_is_learned_exactly() {
        let (x, y) = xor_data();
        let forest = train_forest(&x, &y, &settings(50, 4, 3)).unwrap();
        for (row, &label) in x.iter().zip(&y) {
            let logit = forest.predict_logit(row);
            assert_eq!((logit >= 0.0) as u8, label, "row {row:?} logit {logit}");
        }
    }

    #[test]
    fn pure_node_becomes_leaf_immediately() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![1, 1, 1, 0];
        let forest = train_forest(&x, &y, &settings(1, 8, 1)).unwrap();
        // every leaf in a pure region is a single Leaf node; check the
        // tree is finite and predicts the training data
        assert!(forest.trees[0].nodes.len() < 16);
    }

    #[test]
    fn same_seed_gives_identical_structures() {
        let (x, y) = xor_data();
        let a = train_forest(&x, &y, &settings(20, 4, 9)).unwrap();
        let b = train_forest(&x, &y, &settings(20, 4, 9)).unwrap();
        assert_eq!(a, b);
        let c = train_forest(&x, &y, &settings(20, 4, 10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn importance_sums_to_one() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64, (i % 7) as f64, (i % 3) as f64])
            .collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from(i >= 20)).collect();
        let forest = train_forest(&x, &y, &settings(25, 6, 5)).unwrap();
        let total: f64 = forest.importance.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        // feature 0 carries all the signal
        assert!(forest.importance[0] > 0.5);
    }

    #[test]
    fn strictly_monotone_feature_transform_preserves_predictions() {
        let x: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let a = (i as f64 / 10.0) - 3.0;
                let b = ((i * 13 % 17) as f64) / 4.0 - 2.0;
                vec![a, b]
            })
            .collect();
        let y: Vec<u8> = x
            .iter()
            .map(|r| u8::from(r[0] + 0.3 * r[1] > 0.2))
            .collect();
        let transformed: Vec<Vec<f64>> = x
            .iter()
            .map(|r| vec![r[0].powi(3), r[1]])
            .collect();
        let plain = train_forest(&x, &y, &settings(30, 6, 11)).unwrap();
        let cubed = train_forest(&transformed, &y, &settings(30, 6, 11)).unwrap();
        for (row, cubed_row) in x.iter().zip(&transformed) {
            let a = plain.predict_logit(row) >= 0.0;
            let b = cubed.predict_logit(cubed_row) >= 0.0;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train_forest(&x, &[0, 0], &settings(1, 2, 1)),
            Err(ModelError::SingleClass)
        ));
    }
}
