use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_rows, FeatureRow, Label, Standardizer};
use crate::{Error, Result};

pub const HIDDEN: [usize; 2] = [10, 10];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpHyper {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 2000,
            seed: 0,
        }
    }
}

/// Fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks(self.inputs)
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Sigmoid MLP `[d_in, 10, 10, 1]` over standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub scaler: Standardizer,
    pub layers: Vec<Dense>,
}

impl MlpModel {
    /// Weights uniform in `[-0.5, 0.5)` from a seeded ChaCha8 stream; biases zero.
    pub fn init(scaler: Standardizer, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = [scaler.output_dim(), HIDDEN[0], HIDDEN[1], 1];
        let layers = sizes
            .windows(2)
            .map(|w| {
                let mut layer = Dense::zeros(w[0], w[1]);
                layer
                    .weights
                    .iter_mut()
                    .for_each(|v| *v = rng.random_range(-0.5..0.5));
                layer
            })
            .collect();
        Self { scaler, layers }
    }

    // Activations of every layer, input first; the last entry holds the
    // output logit rather than its sigmoid.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.pre_activation(acts.last().expect("non-empty"));
            acts.push(if i == last {
                z
            } else {
                z.into_iter().map(sigmoid).collect()
            });
        }
        acts
    }

    /// Probability of `Fake` for already standardized input.
    pub fn probability_standardized(&self, x: &[f64]) -> f64 {
        sigmoid(self.forward(x).last().expect("non-empty")[0])
    }

    pub fn probability(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.scaler.input_dim() {
            return Err(Error::Validation(format!(
                "expected {} features, got {}",
                self.scaler.input_dim(),
                features.len()
            )));
        }
        Ok(self.probability_standardized(&self.scaler.transform(features)))
    }

    pub fn predict(&self, features: &[f64]) -> Result<Label> {
        Ok(if self.probability(features)? >= 0.5 {
            Label::Fake
        } else {
            Label::Real
        })
    }

    /// Mean binary cross-entropy over standardized `xs` with targets in {0, 1}.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| {
                let z = self.forward(x).last().expect("non-empty")[0];
                softplus(z) - y * z
            })
            .sum();
        total / xs.len() as f64
    }

    /// Loss and its gradient with respect to every weight and bias.
    pub fn loss_and_gradients(&self, xs: &[Vec<f64>], ys: &[f64]) -> (f64, Vec<Dense>) {
        let n = xs.len() as f64;
        let mut grads: Vec<Dense> = self
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect();
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let acts = self.forward(x);
            let z = acts.last().expect("non-empty")[0];
            loss += softplus(z) - y * z;

            let mut delta = vec![(sigmoid(z) - y) / n];
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let g = &mut grads[li];
                for (o, d) in delta.iter().enumerate() {
                    g.bias[o] += d;
                    for (i, a) in input.iter().enumerate() {
                        g.weights[o * layer.inputs + i] += d * a;
                    }
                }
                if li > 0 {
                    delta = (0..layer.inputs)
                        .map(|i| {
                            let back: f64 = delta
                                .iter()
                                .enumerate()
                                .map(|(o, d)| d * layer.weights[o * layer.inputs + i])
                                .sum();
                            back * input[i] * (1.0 - input[i])
                        })
                        .collect();
                }
            }
        }
        (loss / n, grads)
    }

    fn step(&mut self, grads: &[Dense], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            layer
                .weights
                .iter_mut()
                .zip(&g.weights)
                .for_each(|(w, d)| *w -= lr * d);
            layer
                .bias
                .iter_mut()
                .zip(&g.bias)
                .for_each(|(b, d)| *b -= lr * d);
        }
    }
}

/// Full-batch gradient descent on binary cross-entropy. Returns the model and
/// its loss on the training set after the last update.
pub fn mlp_train(rows: &[FeatureRow], hyper: &MlpHyper) -> Result<(MlpModel, f64)> {
    let dim = check_training_rows(rows)?;
    let scaler = Standardizer::fit(dim, rows.iter().map(|r| r.features.as_slice()));
    let xs: Vec<Vec<f64>> = rows.iter().map(|r| scaler.transform(&r.features)).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| if r.label == Label::Fake { 1.0 } else { 0.0 })
        .collect();

    let mut model = MlpModel::init(scaler, hyper.seed);
    for epoch in 0..hyper.epochs {
        let (loss, grads) = model.loss_and_gradients(&xs, &ys);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        model.step(&grads, hyper.lr);
    }
    let loss = model.loss(&xs, &ys);
    if !loss.is_finite() {
        return Err(Error::Divergence {
            epoch: hyper.epochs,
        });
    }
    Ok((model, loss))
}
