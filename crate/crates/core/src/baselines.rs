//! Logistic regression fitted by full-batch gradient descent on the
//! L2-regularized log loss.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_model::{FeatureMatrix, TabularEncoder};
use crate::math;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BaselineError {
    #[error("labels contain a single class")]
    SingleClass,
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("label at position {0} is not 0/1")]
    BadLabel(usize),
    #[error("feature matrix contains a non-finite value")]
    NonFinite,
    #[error("model expects {expected} features, got {got}")]
    WidthMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub learning_rate: f64,
    /// L2 penalty λ; the objective adds `λ/2 · ‖w‖²` (bias unpenalized).
    pub l2: f64,
    pub max_epochs: usize,
    /// Stop once the loss changes by less than this between epochs.
    pub tolerance: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, l2: 1e-4, max_epochs: 500, tolerance: 1e-7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: LogRegConfig,
    /// Objective value at the start of every epoch, then the final value.
    pub loss_trace: Vec<f64>,
    /// Encoder that produced the training features, when fitted on a table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<TabularEncoder>,
}

impl LogRegModel {
    pub fn with_encoder(mut self, encoder: TabularEncoder) -> Self {
        self.encoder = Some(encoder);
        self
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }

    /// Negated weights and bias: predictions map `p → 1 − p`.
    pub fn negated(&self) -> Self {
        let mut m = self.clone();
        m.weights.iter_mut().for_each(|w| *w = -*w);
        m.bias = -m.bias;
        m
    }
}

/// Objective and gradient `(loss, ∂w, ∂b)` at the given parameters.
pub fn loss_and_gradient(
    features: &FeatureMatrix,
    labels: &[u8],
    weights: &[f64],
    bias: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = features.n_rows as f64;
    let mut grad_w = vec![0.0; features.n_cols];
    let mut grad_b = 0.0;
    let mut loss = 0.0;
    for (row, &y) in features.rows().zip(labels) {
        let z = dot(row, weights) + bias;
        let y = f64::from(y);
        loss += math::softplus(z) - y * z;
        let r = math::sigmoid(z) - y;
        for (g, x) in grad_w.iter_mut().zip(row) {
            *g += r * x;
        }
        grad_b += r;
    }
    let penalty: f64 = weights.iter().map(|w| w * w).sum::<f64>() * l2 / 2.0;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    (loss / n + penalty, grad_w, grad_b / n)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

fn check_inputs(features: &FeatureMatrix, labels: &[u8]) -> Result<(), BaselineError> {
    if features.n_rows != labels.len() {
        return Err(BaselineError::LengthMismatch { rows: features.n_rows, labels: labels.len() });
    }
    if let Some(i) = labels.iter().position(|&y| y > 1) {
        return Err(BaselineError::BadLabel(i));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(BaselineError::SingleClass);
    }
    if !features.is_finite() {
        return Err(BaselineError::NonFinite);
    }
    Ok(())
}

/// Gradient descent from zero weights; fully deterministic.
pub fn fit_logistic_regression(
    features: &FeatureMatrix,
    labels: &[u8],
    config: LogRegConfig,
) -> Result<LogRegModel, BaselineError> {
    check_inputs(features, labels)?;
    let mut weights = vec![0.0; features.n_cols];
    let mut bias = 0.0;
    let mut trace = Vec::with_capacity(config.max_epochs + 1);
    let mut previous: Option<f64> = None;
    for _ in 0..config.max_epochs {
        let (loss, gw, gb) = loss_and_gradient(features, labels, &weights, bias, config.l2);
        trace.push(loss);
        if let Some(prev) = previous {
            if (prev - loss).abs() < config.tolerance {
                break;
            }
        }
        previous = Some(loss);
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= config.learning_rate * g;
        }
        bias -= config.learning_rate * gb;
    }
    let (final_loss, _, _) = loss_and_gradient(features, labels, &weights, bias, config.l2);
    trace.push(final_loss);
    Ok(LogRegModel { weights, bias, config, loss_trace: trace, encoder: None })
}

/// `σ(w·x + b)` per row.
pub fn predict_proba(model: &LogRegModel, features: &FeatureMatrix) -> Result<Vec<f64>, BaselineError> {
    if features.n_cols != model.weights.len() {
        return Err(BaselineError::WidthMismatch { expected: model.weights.len(), got: features.n_cols });
    }
    Ok(features.rows().map(|row| math::sigmoid(dot(row, &model.weights) + model.bias)).collect())
}
