//! Feed-forward network: ReLU hidden layers, softmax cross-entropy output,
//! Adam updates.

use alloc::vec::Vec;

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LearnError;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpParams {
    /// 1 to 3 hidden layers.
    pub hidden_layers: usize,
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Held out from the training set for the validation curve.
    pub validation_fraction: f64,
    /// Validation accuracy is recorded every this many epochs.
    pub validation_interval: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_layers: 1,
            hidden_size: 100,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 200,
            batch_size: 32,
            validation_fraction: 0.1,
            validation_interval: 25,
        }
    }
}

/// Dense layer, weights row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Linear {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    /// Weights uniform in `+-1/sqrt(in_dim)`, biases zero.
    pub(crate) fn init(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / libm::sqrt(in_dim as f64);
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Self {
            weights,
            bias: alloc::vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    pub(crate) fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        for (o, out_v) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            *out_v += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        out
    }

    /// Backward for `z = W x + b`: accumulates dW and db from dz and
    /// returns dx.
    pub(crate) fn backward(&self, x: &[f64], dz: &[f64], grads: &mut LinearGrads) -> Vec<f64> {
        for (o, &g) in dz.iter().enumerate() {
            grads.bias[o] += g;
            let row = &mut grads.weights[o * self.in_dim..(o + 1) * self.in_dim];
            for (w, &v) in row.iter_mut().zip(x) {
                *w += g * v;
            }
        }
        let mut dx = alloc::vec![0.0; self.in_dim];
        for (o, &g) in dz.iter().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            for (dxi, &w) in dx.iter_mut().zip(row) {
                *dxi += g * w;
            }
        }
        dx
    }

    pub(crate) fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Gradient buffers shaped like a [`Linear`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearGrads {
    pub(crate) fn zeros(layer: &Linear) -> Self {
        Self {
            weights: alloc::vec![0.0; layer.weights.len()],
            bias: alloc::vec![0.0; layer.bias.len()],
        }
    }
}

pub(crate) fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()
}

/// Numerically stable softmax.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| libm::exp(v - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

pub(crate) fn cross_entropy(probabilities: &[f64], truth: usize) -> f64 {
    -libm::log(probabilities[truth].max(1e-300))
}

/// Gradient of cross-entropy through a softmax whose output is consumed
/// elsewhere too: `dz = p .* (dp - dot(dp, p))`.
pub(crate) fn softmax_vjp(probabilities: &[f64], dp: &[f64]) -> Vec<f64> {
    let dot: f64 = probabilities.iter().zip(dp).map(|(p, d)| p * d).sum();
    probabilities
        .iter()
        .zip(dp)
        .map(|(p, d)| p * (d - dot))
        .collect()
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

/// Adam state over a list of layers.
pub(crate) struct Adam {
    m: Vec<LinearGrads>,
    v: Vec<LinearGrads>,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    learning_rate: f64,
    beta1_t: f64,
    beta2_t: f64,
}

impl Adam {
    pub(crate) fn new(layers: &[&Linear], params: &MlpParams) -> Self {
        Self {
            m: layers.iter().map(|l| LinearGrads::zeros(l)).collect(),
            v: layers.iter().map(|l| LinearGrads::zeros(l)).collect(),
            beta1: params.beta1,
            beta2: params.beta2,
            epsilon: params.epsilon,
            learning_rate: params.learning_rate,
            beta1_t: 1.0,
            beta2_t: 1.0,
        }
    }

    pub(crate) fn step(&mut self, layers: &mut [&mut Linear], grads: &[LinearGrads]) {
        self.beta1_t *= self.beta1;
        self.beta2_t *= self.beta2;
        for (i, layer) in layers.iter_mut().enumerate() {
            Self::update_slice(
                &mut layer.weights,
                &grads[i].weights,
                &mut self.m[i].weights,
                &mut self.v[i].weights,
                self,
            );
            Self::update_slice(
                &mut layer.bias,
                &grads[i].bias,
                &mut self.m[i].bias,
                &mut self.v[i].bias,
                self,
            );
        }
    }

    fn update_slice(params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64], s: &Self) {
        for i in 0..params.len() {
            m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grads[i];
            v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grads[i] * grads[i];
            let m_hat = m[i] / (1.0 - s.beta1_t);
            let v_hat = v[i] / (1.0 - s.beta2_t);
            params[i] -= s.learning_rate * m_hat / (libm::sqrt(v_hat) + s.epsilon);
        }
    }
}

/// Trained feed-forward classifier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpModel {
    pub layers: Vec<Linear>,
    pub n_classes: usize,
}

impl MlpModel {
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            a = if i + 1 < self.layers.len() { relu(&z) } else { z };
        }
        a
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }

    /// Mean cross-entropy over a batch.
    pub fn batch_loss(&self, x: &[Vec<f64>], y: &[usize]) -> f64 {
        let total: f64 = x
            .iter()
            .zip(y)
            .map(|(row, &label)| cross_entropy(&self.predict_proba(row), label))
            .sum();
        total / x.len() as f64
    }

    /// Mean loss and analytic gradients over a batch.
    pub fn batch_gradients(&self, x: &[Vec<f64>], y: &[usize]) -> (f64, Vec<LinearGrads>) {
        let mut grads: Vec<LinearGrads> = self.layers.iter().map(LinearGrads::zeros).collect();
        let scale = 1.0 / x.len() as f64;
        let mut loss = 0.0;
        for (row, &label) in x.iter().zip(y) {
            // Forward, keeping each layer's input and pre-activation.
            let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            let mut zs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
            let mut a = row.clone();
            for (i, layer) in self.layers.iter().enumerate() {
                inputs.push(a.clone());
                let z = layer.forward(&a);
                a = if i + 1 < self.layers.len() { relu(&z) } else { z.clone() };
                zs.push(z);
            }
            let probabilities = softmax(&a);
            loss += scale * cross_entropy(&probabilities, label);

            let mut dz: Vec<f64> = probabilities
                .iter()
                .enumerate()
                .map(|(i, &p)| scale * (p - if i == label { 1.0 } else { 0.0 }))
                .collect();
            for i in (0..self.layers.len()).rev() {
                let dx = self.layers[i].backward(&inputs[i], &dz, &mut grads[i]);
                if i > 0 {
                    dz = dx
                        .iter()
                        .zip(&zs[i - 1])
                        .map(|(&d, &z)| if z > 0.0 { d } else { 0.0 })
                        .collect();
                }
            }
        }
        (loss, grads)
    }
}

/// Training curve: per-epoch mean training loss, plus validation accuracy
/// checkpoints as (epoch, accuracy).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingHistory {
    pub epoch_losses: Vec<f64>,
    pub validation: Vec<(usize, f64)>,
}

pub fn mlp_train(
    params: &MlpParams,
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<(MlpModel, TrainingHistory), LearnError> {
    if x.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch);
    }
    if n_classes < 2 {
        return Err(LearnError::TooFewClasses { classes: n_classes });
    }
    assert!(
        (1..=3).contains(&params.hidden_layers),
        "1 to 3 hidden layers supported"
    );

    let n_features = x[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(params.hidden_layers + 1);
    let mut in_dim = n_features;
    for _ in 0..params.hidden_layers {
        layers.push(Linear::init(in_dim, params.hidden_size, &mut rng));
        in_dim = params.hidden_size;
    }
    layers.push(Linear::init(in_dim, n_classes, &mut rng));
    let mut model = MlpModel { layers, n_classes };

    // Hold out the validation slice for curve reporting.
    let mut indices: Vec<usize> = (0..x.len()).collect();
    indices.shuffle(&mut rng);
    let val_count = libm::floor(params.validation_fraction * x.len() as f64) as usize;
    let (val_idx, train_idx) = indices.split_at(val_count);
    let val_idx = val_idx.to_vec();
    let mut train_idx = train_idx.to_vec();
    if train_idx.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }

    let layer_refs: Vec<&Linear> = model.layers.iter().collect();
    let mut adam = Adam::new(&layer_refs, params);
    let mut history = TrainingHistory::default();

    for epoch in 0..params.epochs {
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in train_idx.chunks(params.batch_size).enumerate() {
            let bx: Vec<Vec<f64>> = batch.iter().map(|&i| x[i].clone()).collect();
            let by: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let (loss, grads) = model.batch_gradients(&bx, &by);
            if !loss.is_finite() {
                return Err(LearnError::NanLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            epoch_loss += loss * batch.len() as f64;
            let mut refs: Vec<&mut Linear> = model.layers.iter_mut().collect();
            adam.step(&mut refs, &grads);
        }
        history.epoch_losses.push(epoch_loss / train_idx.len() as f64);

        let last = epoch + 1 == params.epochs;
        if !val_idx.is_empty() && ((epoch + 1) % params.validation_interval == 0 || last) {
            let correct = val_idx
                .iter()
                .filter(|&&i| model.predict(&x[i]) == y[i])
                .count();
            history
                .validation
                .push((epoch + 1, correct as f64 / val_idx.len() as f64));
        }
    }
    Ok((model, history))
}
