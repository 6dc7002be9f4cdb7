use serde::{Deserialize, Serialize};

use super::{
    check_training_set, clamp_probability, gradient_descent, logit_loss, sigmoid, FitTrace, LearnError, MinMaxScaler,
    TrainConfig,
};

/// `p(x) = sigmoid(bias + weights · scale(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub scaler: MinMaxScaler,
    /// Weights on the scaled features.
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn logit(&self, x: &[f64]) -> Result<f64, LearnError> {
        let xs = self.scaler.transform(x)?;
        Ok(self.bias + self.weights.iter().zip(&xs).map(|(w, v)| w * v).sum::<f64>())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        self.logit(x).map(|z| clamp_probability(sigmoid(z)))
    }

    /// Intercept and coefficients expressed on the unscaled features.
    pub fn raw_coefficients(&self) -> (f64, Vec<f64>) {
        let mut intercept = self.bias;
        let coefs = self
            .weights
            .iter()
            .enumerate()
            .map(|(j, w)| {
                let c = w / self.scaler.span(j);
                intercept -= c * self.scaler.min[j];
                c
            })
            .collect();
        (intercept, coefs)
    }

    /// Flat parameters: weights followed by the bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    /// Mean cross-entropy (plus penalty) over already-scaled rows and its
    /// gradient with respect to [`Self::parameters`].
    pub fn loss_and_gradient(&self, x_scaled: &[Vec<f64>], y: &[bool], l2_penalty: f64) -> (f64, Vec<f64>) {
        let params = self.parameters();
        let mut grad = vec![0.0; params.len()];
        let loss = loss_grad(&params, x_scaled, y, l2_penalty, &mut grad);
        (loss, grad)
    }
}

fn loss_grad(params: &[f64], x: &[Vec<f64>], y: &[bool], l2: f64, grad: &mut [f64]) -> f64 {
    let d = params.len() - 1;
    let n = x.len() as f64;
    let mut loss = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = params[d] + params[..d].iter().zip(row).map(|(w, v)| w * v).sum::<f64>();
        loss += logit_loss(z, label);
        let err = sigmoid(z) - if label { 1.0 } else { 0.0 };
        for (g, v) in grad[..d].iter_mut().zip(row) {
            *g += err * v;
        }
        grad[d] += err;
    }
    grad.iter_mut().for_each(|g| *g /= n);
    loss /= n;
    if l2 > 0.0 {
        for (g, w) in grad[..d].iter_mut().zip(&params[..d]) {
            *g += 2.0 * l2 * w;
            loss += l2 * w * w;
        }
    }
    loss
}

/// Fits by full-batch gradient descent from zero weights.
pub fn fit_logistic(x: &[Vec<f64>], y: &[bool], config: &TrainConfig) -> Result<LogisticModel, LearnError> {
    fit_logistic_traced(x, y, config).map(|(m, _)| m)
}

pub fn fit_logistic_traced(x: &[Vec<f64>], y: &[bool], config: &TrainConfig) -> Result<(LogisticModel, FitTrace), LearnError> {
    config.validate()?;
    let d = check_training_set(x, y)?;
    let scaler = MinMaxScaler::fit(x);
    let xs = scaler.transform_all(x);
    let mut params = vec![0.0; d + 1];
    let trace = gradient_descent(&mut params, config, |p, g| loss_grad(p, &xs, y, config.l2_penalty, g))?;
    let bias = params[d];
    params.truncate(d);
    Ok((LogisticModel { scaler, weights: params, bias }, trace))
}
