use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bce_loss, check_training_data, sigmoid, Comparator, Standardizer, TrainConfig};
use crate::error::Result;

/// Width of both hidden layers.
pub const MLP_HIDDEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    n_in: usize,
    n_out: usize,
    /// Row-major `n_out × n_in`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Dense {
    fn init(n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (n_in + n_out) as f64).sqrt();
        let weights = (0..n_in * n_out)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        let bias = (0..n_out).map(|_| rng.gen_range(-bound..bound)).collect();
        Self {
            n_in,
            n_out,
            weights,
            bias,
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| {
                let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
                self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Feed-forward network `d → 32 → 32 → 1`, ReLU hidden units and a sigmoid
/// output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layers: Vec<Dense>,
    pub standardizer: Standardizer,
    pub epochs_run: usize,
    /// Mean training BCE after each epoch.
    pub loss_curve: Vec<f64>,
}

struct Activations {
    /// Inputs to each layer, plus the final logit as a 1-vector.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of hidden layers.
    pre: Vec<Vec<f64>>,
}

impl MlpModel {
    /// Glorot-uniform initialization, `U(±sqrt(6/(fan_in+fan_out)))`.
    pub fn initialize(n_features: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = [n_features, MLP_HIDDEN, MLP_HIDDEN, 1];
        let layers = sizes
            .windows(2)
            .map(|w| Dense::init(w[0], w[1], &mut rng))
            .collect();
        Self {
            layers,
            standardizer: Standardizer::identity(n_features),
            epochs_run: 0,
            loss_curve: Vec::new(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Dense::n_params).sum()
    }

    /// All weights and biases, layer by layer (weights before biases).
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.n_params(), "parameter count mismatch");
        let mut offset = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            layer.weights.copy_from_slice(&params[offset..offset + nw]);
            offset += nw;
            let nb = layer.bias.len();
            layer.bias.copy_from_slice(&params[offset..offset + nb]);
            offset += nb;
        }
    }

    fn forward(&self, x: &[f64]) -> Activations {
        let mut inputs = vec![x.to_vec()];
        let mut pre = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(inputs.last().unwrap());
            if i < last {
                inputs.push(z.iter().map(|v| v.max(0.0)).collect());
                pre.push(z);
            } else {
                inputs.push(z);
            }
        }
        Activations { inputs, pre }
    }

    /// Output probability on already-standardized input.
    fn proba_scaled(&self, x: &[f64]) -> f64 {
        sigmoid(self.forward(x).inputs.last().unwrap()[0])
    }

    /// Mean BCE over `(x, y)` and its gradient with respect to
    /// [`MlpModel::params`]. Inputs are used as given (no standardization).
    pub fn loss_and_gradient<R: AsRef<[f64]>>(&self, x: &[R], y: &[f64]) -> (f64, Vec<f64>) {
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
            .collect();
        let mut probs = Vec::with_capacity(x.len());
        let n = x.len() as f64;

        for (row, &yi) in x.iter().zip(y) {
            let act = self.forward(row.as_ref());
            let logit = act.inputs.last().unwrap()[0];
            let p = sigmoid(logit);
            probs.push(p);

            let mut delta = vec![(p - yi) / n];
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &act.inputs[li];
                let (gw, gb) = &mut grads[li];
                for o in 0..layer.n_out {
                    gb[o] += delta[o];
                    let row = &mut gw[o * layer.n_in..(o + 1) * layer.n_in];
                    for (g, v) in row.iter_mut().zip(input) {
                        *g += delta[o] * v;
                    }
                }
                if li == 0 {
                    break;
                }
                let pre = &act.pre[li - 1];
                delta = (0..layer.n_in)
                    .map(|i| {
                        if pre[i] <= 0.0 {
                            return 0.0;
                        }
                        (0..layer.n_out)
                            .map(|o| layer.weights[o * layer.n_in + i] * delta[o])
                            .sum()
                    })
                    .collect();
            }
        }

        let loss = bce_loss(&probs, y).unwrap_or(f64::NAN);
        let grad = grads
            .into_iter()
            .flat_map(|(w, b)| w.into_iter().chain(b))
            .collect();
        (loss, grad)
    }
}

impl Comparator for MlpModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.proba_scaled(&self.standardizer.apply(x))
    }
}

/// Mini-batch Adam on mean BCE for `cfg.max_iter` epochs. Batches are
/// reshuffled every epoch from a generator seeded with `cfg.seed`.
pub fn fit_mlp<R: AsRef<[f64]>>(x: &[R], y: &[f64], cfg: &TrainConfig) -> Result<MlpModel> {
    let dim = check_training_data(x, y)?;
    let mut model = MlpModel::initialize(dim, cfg.seed);
    if cfg.standardize {
        model.standardizer = Standardizer::fit(x);
    }
    let xs: Vec<Vec<f64>> = x.iter().map(|r| model.standardizer.apply(r.as_ref())).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let batch = cfg.batch_size.clamp(1, xs.len());
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut params = model.params();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut step = 0i32;

    for _ in 0..cfg.max_iter {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let bx: Vec<&[f64]> = chunk.iter().map(|&i| xs[i].as_slice()).collect();
            let by: Vec<f64> = chunk.iter().map(|&i| y[i]).collect();
            let (_, grad) = model.loss_and_gradient(&bx, &by);
            step += 1;
            let c1 = 1.0 - cfg.beta1.powi(step);
            let c2 = 1.0 - cfg.beta2.powi(step);
            for k in 0..params.len() {
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * grad[k];
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * grad[k] * grad[k];
                params[k] -= cfg.step_size * (m[k] / c1) / ((v[k] / c2).sqrt() + cfg.adam_eps);
            }
            model.set_params(&params);
        }
        model.epochs_run += 1;
        let probs: Vec<f64> = xs.iter().map(|r| model.proba_scaled(r)).collect();
        model.loss_curve.push(bce_loss(&probs, y)?);
    }
    Ok(model)
}
