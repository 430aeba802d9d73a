//! L2-regularized logistic regression trained by full-batch gradient
//! descent. Weights live on standardized features so their magnitudes
//! are comparable across features in the bias report.

use super::ModelError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean log-loss plus (lambda/2) * ||w||^2.
pub fn logistic_loss(
    x: &[Vec<f64>],
    y: &[u8],
    weights: &[f64],
    bias: f64,
    l2_lambda: f64,
) -> f64 {
    let n = x.len() as f64;
    let data_loss: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let z = dot(weights, row) + bias;
            softplus(z) - f64::from(label) * z
        })
        .sum::<f64>()
        / n;
    data_loss + 0.5 * l2_lambda * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`logistic_loss`] in (weights, bias).
pub fn logistic_gradient(
    x: &[Vec<f64>],
    y: &[u8],
    weights: &[f64],
    bias: f64,
    l2_lambda: f64,
) -> (Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let residual = sigmoid(dot(weights, row) + bias) - f64::from(label);
        for (g, &v) in grad_w.iter_mut().zip(row) {
            *g += residual * v;
        }
        grad_b += residual;
    }
    for (g, &w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2_lambda * w;
    }
    (grad_w, grad_b / n)
}

pub fn dot(weights: &[f64], row: &[f64]) -> f64 {
    weights.iter().zip(row).map(|(w, v)| w * v).sum::<f64>()
}

/// Full-batch gradient descent from zero initialization for a fixed
/// number of epochs. Deterministic for fixed inputs.
pub fn train_logistic(
    x: &[Vec<f64>],
    y: &[u8],
    learning_rate: f64,
    epochs: usize,
    l2_lambda: f64,
) -> Result<LogisticParams, ModelError> {
    let positives = y.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(ModelError::SingleClass);
    }
    for (i, row) in x.iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { row: i, feature: j });
        }
    }
    let width = x[0].len();
    let mut weights = vec![0.0; width];
    let mut bias = 0.0;
    for _ in 0..epochs {
        let (grad_w, grad_b) = logistic_gradient(x, y, &weights, bias, l2_lambda);
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= learning_rate * g;
        }
        bias -= learning_rate * grad_b;
    }
    Ok(LogisticParams {
        weights,
        bias,
        l2_lambda,
    })
}

impl LogisticParams {
    pub fn predict_logit(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }
}
