//! Logistic-regression and MLP comparators trained with binary cross-entropy.

mod logistic;
mod mlp;

pub use logistic::{fit_logistic, LogisticModel};
pub use mlp::{fit_mlp, MlpModel, MLP_HIDDEN};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability clamp used by [`bce_loss`].
pub const PROB_EPS: f64 = 1e-12;

/// A fitted binary classifier over pairwise features, returning the
/// probability that the left model of the pair wins.
pub trait Comparator: Send + Sync {
    fn predict_proba(&self, x: &[f64]) -> f64;
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy with probabilities clamped to `[ε, 1−ε]`.
pub fn bce_loss(probabilities: &[f64], labels: &[f64]) -> Result<f64> {
    if probabilities.is_empty() {
        return Err(Error::Domain("bce_loss of an empty batch".into()));
    }
    if probabilities.len() != labels.len() {
        return Err(Error::Domain(format!(
            "{} probabilities but {} labels",
            probabilities.len(),
            labels.len()
        )));
    }
    let total: f64 = probabilities
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            -y * p.ln() - (1.0 - y) * (1.0 - p).ln()
        })
        .sum();
    Ok(total / probabilities.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Damped Newton iterations on the full objective (logistic).
    QuasiNewton,
    /// Mini-batch adaptive-moment updates (MLP).
    AdaptiveMoment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Newton iterations (logistic) or epochs (MLP).
    pub max_iter: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Gradient-norm stopping threshold (logistic only; MLP always runs
    /// `max_iter` epochs).
    pub tolerance: f64,
    /// Inverse L2 strength; the logistic penalty is `‖w‖² / (2C)`.
    pub l2_c: f64,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    /// Standardize inputs with the training mean and deviation before fitting.
    pub standardize: bool,
}

impl TrainConfig {
    pub fn logistic() -> Self {
        Self {
            max_iter: 100,
            seed: 0,
            optimizer: Optimizer::QuasiNewton,
            tolerance: 1e-6,
            l2_c: 1.0,
            step_size: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 200,
            standardize: true,
        }
    }

    pub fn mlp() -> Self {
        Self {
            optimizer: Optimizer::AdaptiveMoment,
            tolerance: 1e-4,
            step_size: 1e-3,
            ..Self::logistic()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Per-column affine scaling fitted on training inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Mean and population deviation per column; constant columns keep
    /// scale 1.
    pub fn fit<R: AsRef<[f64]>>(x: &[R]) -> Self {
        let dim = x[0].as_ref().len();
        let n = x.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row.as_ref()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row.as_ref()).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Shared input checks: matching lengths, rectangular finite rows, binary
/// labels with both classes present.
pub(crate) fn check_training_data<R: AsRef<[f64]>>(x: &[R], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "{} samples but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 samples, got {}",
            x.len()
        )));
    }
    let dim = x[0].as_ref().len();
    if dim == 0 || x.iter().any(|r| r.as_ref().len() != dim) {
        return Err(Error::Domain("ragged or empty feature rows".into()));
    }
    if x.iter().any(|r| r.as_ref().iter().any(|v| !v.is_finite())) {
        return Err(Error::Domain("non-finite feature value".into()));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Domain("labels must be 0 or 1".into()));
    }
    let positives = y.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::DegenerateFit(
            "training labels contain a single class".into(),
        ));
    }
    Ok(dim)
}
