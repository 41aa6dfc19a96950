use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_training_data, sigmoid, Comparator, Standardizer, TrainConfig};
use crate::error::Result;

/// L2-regularized logistic regression. Weights act on standardized inputs
/// when the training config asked for standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_c: f64,
    pub standardizer: Standardizer,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        let dim = weights.len();
        Self {
            weights,
            bias,
            l2_c: 1.0,
            standardizer: Standardizer::identity(dim),
            iterations: 0,
            converged: false,
        }
    }

    fn logit(&self, x: &[f64]) -> f64 {
        let x = self.standardizer.apply(x);
        self.bias + x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>()
    }

    /// Regularized objective `Σ BCE + ‖w‖²/(2C)` and its gradient with
    /// respect to `params = [w..., b]`. The bias is not penalized.
    pub fn objective<R: AsRef<[f64]>>(
        params: &[f64],
        x: &[R],
        y: &[f64],
        l2_c: f64,
    ) -> (f64, Vec<f64>) {
        let dim = params.len() - 1;
        let (w, b) = (&params[..dim], params[dim]);
        let mut value = w.iter().map(|v| v * v).sum::<f64>() / (2.0 * l2_c);
        let mut grad: Vec<f64> = w.iter().map(|v| v / l2_c).chain([0.0]).collect();
        for (row, &yi) in x.iter().zip(y) {
            let row = row.as_ref();
            let z = b + row.iter().zip(w).map(|(a, w)| a * w).sum::<f64>();
            // softplus(z) - y z, evaluated without overflow
            value += z.max(0.0) + (-z.abs()).exp().ln_1p() - yi * z;
            let r = sigmoid(z) - yi;
            for (g, a) in grad.iter_mut().zip(row) {
                *g += r * a;
            }
            grad[dim] += r;
        }
        (value, grad)
    }
}

impl Comparator for LogisticModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

/// Fits by damped Newton iterations until the gradient norm drops to
/// `cfg.tolerance` or `cfg.max_iter` iterations have run. Deterministic.
pub fn fit_logistic<R: AsRef<[f64]>>(x: &[R], y: &[f64], cfg: &TrainConfig) -> Result<LogisticModel> {
    let dim = check_training_data(x, y)?;
    let standardizer = if cfg.standardize {
        Standardizer::fit(x)
    } else {
        Standardizer::identity(dim)
    };
    let xs: Vec<Vec<f64>> = x.iter().map(|r| standardizer.apply(r.as_ref())).collect();

    let mut params = vec![0.0; dim + 1];
    let (mut value, mut grad) = LogisticModel::objective(&params, &xs, y, cfg.l2_c);
    let mut iterations = 0;
    let mut converged = norm(&grad) <= cfg.tolerance;

    while !converged && iterations < cfg.max_iter {
        iterations += 1;
        let direction = newton_direction(&params, &xs, &grad, cfg.l2_c);
        let slope: f64 = direction.iter().zip(&grad).map(|(d, g)| d * g).sum();
        let direction = if slope < 0.0 {
            direction
        } else {
            grad.iter().map(|g| -g).collect()
        };
        let slope: f64 = direction.iter().zip(&grad).map(|(d, g)| d * g).sum();

        // Armijo backtracking.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = params
                .iter()
                .zip(&direction)
                .map(|(p, d)| p + t * d)
                .collect();
            let (v, g) = LogisticModel::objective(&trial, &xs, y, cfg.l2_c);
            if v <= value + 1e-4 * t * slope {
                accepted = Some((trial, v, g));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, v, g)) = accepted else {
            break;
        };
        params = trial;
        value = v;
        grad = g;
        converged = norm(&grad) <= cfg.tolerance;
    }

    Ok(LogisticModel {
        weights: params[..dim].to_vec(),
        bias: params[dim],
        l2_c: cfg.l2_c,
        standardizer,
        iterations,
        converged,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum::<f64>().sqrt()
}

fn newton_direction(params: &[f64], xs: &[Vec<f64>], grad: &[f64], l2_c: f64) -> Vec<f64> {
    let dim = params.len() - 1;
    let n = dim + 1;
    let mut hessian = DMatrix::<f64>::zeros(n, n);
    for row in xs {
        let z = params[dim] + row.iter().zip(params).map(|(a, w)| a * w).sum::<f64>();
        let p = sigmoid(z);
        let s = p * (1.0 - p);
        for i in 0..n {
            let ai = if i < dim { row[i] } else { 1.0 };
            for j in 0..=i {
                let aj = if j < dim { row[j] } else { 1.0 };
                hessian[(i, j)] += s * ai * aj;
            }
        }
    }
    for i in 0..n {
        if i < dim {
            hessian[(i, i)] += 1.0 / l2_c;
        }
        for j in 0..i {
            hessian[(j, i)] = hessian[(i, j)];
        }
    }
    let g = DVector::from_column_slice(grad);
    match hessian.cholesky() {
        Some(chol) => (-chol.solve(&g)).iter().copied().collect(),
        None => grad.iter().map(|v| -v).collect(),
    }
}
