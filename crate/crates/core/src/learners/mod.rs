//! Probabilistic binary classifiers trained from scratch with full-batch
//! gradient descent: logistic regression and a small tanh network with a
//! logistic output unit. Inputs are min-max scaled by training ranges and
//! the scaling is stored in the model, so prediction takes raw features.

mod logistic;
mod network;
mod scaler;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use logistic::{fit_logistic, fit_logistic_traced, LogisticModel};
pub use network::{fit_network, fit_network_traced, DenseLayer, NetworkModel};
pub use scaler::MinMaxScaler;

/// Predictions are kept this far away from 0 and 1.
pub const PROBABILITY_MARGIN: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("training loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{0}")]
    Precondition(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub learning_rate: f64,
    /// Coefficient of the squared L2 norm of the weights (biases excluded).
    pub l2_penalty: f64,
    /// Training stops once the loss changes by less than this between epochs.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { max_epochs: 2000, learning_rate: 0.1, l2_penalty: 0.0, tolerance: 1e-7, seed: 0 }
    }
}

impl TrainConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    fn validate(&self) -> Result<(), LearnError> {
        if self.max_epochs == 0 || !(self.learning_rate > 0.0) || !(self.l2_penalty >= 0.0) || !(self.tolerance >= 0.0) {
            return Err(LearnError::Precondition(format!("invalid training configuration {self:?}")));
        }
        Ok(())
    }
}

/// Loss per epoch and whether the tolerance criterion stopped training.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    pub losses: Vec<f64>,
    pub converged: bool,
}

/// Architecture of a classifier to train.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Network { hidden: Vec<usize> },
}

impl ModelKind {
    /// Two hidden layers of 8 and 4 units.
    pub fn network_8_4() -> Self {
        ModelKind::Network { hidden: vec![8, 4] }
    }

    pub fn network_8_8() -> Self {
        ModelKind::Network { hidden: vec![8, 8] }
    }

    pub fn fit(&self, x: &[Vec<f64>], y: &[bool], config: &TrainConfig) -> Result<Model, LearnError> {
        match self {
            ModelKind::Logistic => fit_logistic(x, y, config).map(Model::Logistic),
            ModelKind::Network { hidden } => fit_network(x, y, hidden, config).map(Model::Network),
        }
    }
}

/// A trained classifier of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Logistic(LogisticModel),
    Network(NetworkModel),
}

impl Model {
    /// Probability of the positive class, strictly inside (0, 1).
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        match self {
            Model::Logistic(m) => m.predict_proba(x),
            Model::Network(m) => m.predict_proba(x),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Logistic(m) => m.weights.len(),
            Model::Network(m) => m.layer_sizes()[0],
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROBABILITY_MARGIN, 1.0 - PROBABILITY_MARGIN)
}

/// Binary cross-entropy of a logit, `softplus(z) - y z`, without overflow.
pub(crate) fn logit_loss(z: f64, y: bool) -> f64 {
    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
    if y { softplus - z } else { softplus }
}

pub(crate) fn check_training_set(x: &[Vec<f64>], y: &[bool]) -> Result<usize, LearnError> {
    if x.is_empty() || x.len() != y.len() {
        return Err(LearnError::Precondition(format!("{} rows for {} labels", x.len(), y.len())));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(LearnError::Precondition("rows have different lengths".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(LearnError::Precondition("features must be complete and finite".into()));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(LearnError::Precondition("training labels contain a single class".into()));
    }
    Ok(d)
}

/// Fixed-step gradient descent over a flat parameter vector.
pub(crate) fn gradient_descent(
    params: &mut [f64],
    config: &TrainConfig,
    mut loss_grad: impl FnMut(&[f64], &mut [f64]) -> f64,
) -> Result<FitTrace, LearnError> {
    let mut grad = vec![0.0; params.len()];
    let mut losses: Vec<f64> = Vec::with_capacity(config.max_epochs + 1);
    let mut converged = false;
    for epoch in 0..config.max_epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let loss = loss_grad(params, &mut grad);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(LearnError::Diverged { epoch });
        }
        if let Some(&prev) = losses.last() {
            if (prev - loss).abs() < config.tolerance {
                losses.push(loss);
                converged = true;
                break;
            }
        }
        losses.push(loss);
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= config.learning_rate * g;
        }
    }
    Ok(FitTrace { losses, converged })
}
