use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_training_set, clamp_probability, gradient_descent, logit_loss, sigmoid, FitTrace, LearnError, MinMaxScaler,
    TrainConfig,
};

/// Fully connected layer; `weights[o][i]` connects input `i` to unit `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    fn outputs(&self) -> usize {
        self.biases.len()
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .iter()
                .zip(&self.biases)
                .map(|(w, b)| b + w.iter().zip(input).map(|(a, x)| a * x).sum::<f64>()),
        );
    }
}

/// Feed-forward network: tanh hidden layers and one logistic output unit.
/// With no hidden layer it reduces to logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub scaler: MinMaxScaler,
    pub layers: Vec<DenseLayer>,
}

impl NetworkModel {
    /// Uniform initialization in ±1/√fan_in for weights and biases.
    pub fn initialize(scaler: MinMaxScaler, hidden: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![scaler.dim()];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0].max(1) as f64).sqrt();
                let mut draw = || rng.random_range(-bound..=bound);
                DenseLayer {
                    weights: (0..w[1]).map(|_| (0..w[0]).map(|_| draw()).collect()).collect(),
                    biases: (0..w[1]).map(|_| draw()).collect(),
                }
            })
            .collect();
        Self { scaler, layers }
    }

    /// `[inputs, hidden..., 1]`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs()];
        sizes.extend(self.layers.iter().map(DenseLayer::outputs));
        sizes
    }

    fn logit_scaled(&self, xs: &[f64]) -> f64 {
        let mut a = xs.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.apply(&a, &mut z);
            if l < last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            std::mem::swap(&mut a, &mut z);
        }
        a[0]
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        let xs = self.scaler.transform(x)?;
        Ok(clamp_probability(sigmoid(self.logit_scaled(&xs))))
    }

    /// Flat parameters, layer by layer: row-major weights then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::new();
        for layer in &self.layers {
            for row in &layer.weights {
                p.extend_from_slice(row);
            }
            p.extend_from_slice(&layer.biases);
        }
        p
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut it = params.iter().copied();
        for layer in &mut self.layers {
            for row in &mut layer.weights {
                row.iter_mut().for_each(|w| *w = it.next().expect("parameter count"));
            }
            layer.biases.iter_mut().for_each(|b| *b = it.next().expect("parameter count"));
        }
        assert!(it.next().is_none(), "parameter count");
    }

    /// Mean cross-entropy (plus penalty) over already-scaled rows and its
    /// backpropagated gradient with respect to [`Self::parameters`].
    pub fn loss_and_gradient(&self, x_scaled: &[Vec<f64>], y: &[bool], l2_penalty: f64) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.parameters().len()];
        let loss = Backprop::new(self).run(self, x_scaled, y, l2_penalty, &mut grad);
        (loss, grad)
    }
}

/// Reusable per-sample buffers.
struct Backprop {
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
    offsets: Vec<usize>,
}

impl Backprop {
    fn new(model: &NetworkModel) -> Self {
        let sizes = model.layer_sizes();
        let mut offsets = Vec::new();
        let mut off = 0;
        for layer in &model.layers {
            offsets.push(off);
            off += layer.inputs() * layer.outputs() + layer.outputs();
        }
        Self {
            acts: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            deltas: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            offsets,
        }
    }

    fn run(&mut self, model: &NetworkModel, x: &[Vec<f64>], y: &[bool], l2: f64, grad: &mut [f64]) -> f64 {
        let last = model.layers.len() - 1;
        let n = x.len() as f64;
        let mut loss = 0.0;
        for (row, &label) in x.iter().zip(y) {
            self.acts[0].copy_from_slice(row);
            for (l, layer) in model.layers.iter().enumerate() {
                let (head, tail) = self.acts.split_at_mut(l + 1);
                let input = &head[l];
                let out = &mut tail[0];
                for (o, (w, b)) in layer.weights.iter().zip(&layer.biases).enumerate() {
                    let z = b + w.iter().zip(input.iter()).map(|(a, v)| a * v).sum::<f64>();
                    out[o] = if l < last { z.tanh() } else { z };
                }
            }
            let logit = self.acts[last + 1][0];
            loss += logit_loss(logit, label);
            self.deltas[last + 1][0] = sigmoid(logit) - if label { 1.0 } else { 0.0 };

            for l in (0..=last).rev() {
                let layer = &model.layers[l];
                let (ni, no) = (layer.inputs(), layer.outputs());
                let off = self.offsets[l];
                for o in 0..no {
                    let d = self.deltas[l + 1][o];
                    let gw = &mut grad[off + o * ni..off + (o + 1) * ni];
                    for (g, a) in gw.iter_mut().zip(&self.acts[l]) {
                        *g += d * a;
                    }
                    grad[off + ni * no + o] += d;
                }
                if l > 0 {
                    for i in 0..ni {
                        let back: f64 = (0..no).map(|o| layer.weights[o][i] * self.deltas[l + 1][o]).sum();
                        let a = self.acts[l][i];
                        self.deltas[l][i] = back * (1.0 - a * a);
                    }
                }
            }
        }
        grad.iter_mut().for_each(|g| *g /= n);
        loss /= n;
        if l2 > 0.0 {
            for (l, layer) in model.layers.iter().enumerate() {
                let off = self.offsets[l];
                let count = layer.inputs() * layer.outputs();
                for (k, w) in layer.weights.iter().flatten().enumerate() {
                    grad[off + k] += 2.0 * l2 * w;
                    loss += l2 * w * w;
                }
                debug_assert!(count == layer.weights.iter().map(Vec::len).sum::<usize>());
            }
        }
        loss
    }
}

/// Trains a network with the given hidden layer sizes by full-batch
/// gradient descent on the cross-entropy loss.
pub fn fit_network(x: &[Vec<f64>], y: &[bool], hidden: &[usize], config: &TrainConfig) -> Result<NetworkModel, LearnError> {
    fit_network_traced(x, y, hidden, config).map(|(m, _)| m)
}

pub fn fit_network_traced(
    x: &[Vec<f64>],
    y: &[bool],
    hidden: &[usize],
    config: &TrainConfig,
) -> Result<(NetworkModel, FitTrace), LearnError> {
    config.validate()?;
    check_training_set(x, y)?;
    if hidden.contains(&0) {
        return Err(LearnError::Precondition("hidden layers need at least one unit".into()));
    }
    let scaler = MinMaxScaler::fit(x);
    let xs = scaler.transform_all(x);
    let mut model = NetworkModel::initialize(scaler, hidden, config.seed);
    let mut params = model.parameters();
    let mut shadow = model.clone();
    let mut bp = Backprop::new(&model);
    let trace = gradient_descent(&mut params, config, |p, g| {
        shadow.set_parameters(p);
        bp.run(&shadow, &xs, y, config.l2_penalty, g)
    })?;
    model.set_parameters(&params);
    Ok((model, trace))
}
