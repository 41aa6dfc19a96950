//! Oracles shared by the integration and acceptance suites. Nothing here
//! calls into the code paths it checks.

#![allow(dead_code)]

use ltcrank::dataset::{ModelRecord, Proxy};
use ltcrank::gbdt::{GbdtConfig, MIN_CHILD_HESSIAN};
use ltcrank::learners::{LogisticModel, MlpModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best split by enumerating every `x <= v` partition and summing the
/// children from scratch. Returns `(gain, feature, left member mask)`.
pub fn brute_force_split(
    x: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    min_leaf: usize,
) -> Option<(f64, usize, Vec<bool>)> {
    let n = x.len();
    let dim = x[0].len();
    let g: f64 = grad.iter().sum();
    let h: f64 = hess.iter().sum();
    let parent = g * g / h;
    let mut best: Option<(f64, usize, Vec<bool>)> = None;
    for f in 0..dim {
        let mut values: Vec<f64> = x.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for &v in &values[..values.len() - 1] {
            let mask: Vec<bool> = x.iter().map(|r| r[f] <= v).collect();
            let nl = mask.iter().filter(|m| **m).count();
            if nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let (mut gl, mut hl) = (0.0, 0.0);
            for i in 0..n {
                if mask[i] {
                    gl += grad[i];
                    hl += hess[i];
                }
            }
            let (gr, hr) = (g - gl, h - hl);
            if hl < MIN_CHILD_HESSIAN || hr < MIN_CHILD_HESSIAN {
                continue;
            }
            let gain = 0.5 * (gl * gl / hl + gr * gr / hr - parent);
            if best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, f, mask));
            }
        }
    }
    best.filter(|b| b.0 > 1e-10)
}

pub struct SplitCase {
    pub x: Vec<Vec<f64>>,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    pub min_leaf: usize,
}

/// Random small instance; some features are drawn from a few integer levels
/// so duplicate values occur.
pub fn random_split_case(seed: u64) -> SplitCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..40);
    let dim = rng.gen_range(1..5);
    let x = (0..n)
        .map(|_| {
            (0..dim)
                .map(|f| {
                    if f % 2 == 0 {
                        rng.gen_range(-3.0..3.0)
                    } else {
                        rng.gen_range(0..4) as f64
                    }
                })
                .collect()
        })
        .collect();
    let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
    let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))).collect();
    SplitCase {
        x,
        grad: p.iter().zip(&y).map(|(p, y)| p - y).collect(),
        hess: p.iter().map(|p| p * (1.0 - p)).collect(),
        min_leaf: rng.gen_range(1..6),
    }
}

/// Compares `find_best_split` to the oracle on one case.
pub fn check_split_case(case: &SplitCase) -> Result<(), String> {
    let cfg = GbdtConfig {
        min_data_in_leaf: case.min_leaf,
        ..GbdtConfig::default()
    };
    let indices: Vec<usize> = (0..case.x.len()).collect();
    let found = ltcrank::gbdt::find_best_split(&case.x, &case.grad, &case.hess, &indices, &cfg);
    let oracle = brute_force_split(&case.x, &case.grad, &case.hess, case.min_leaf);
    match (found, oracle) {
        (None, None) => Ok(()),
        (Some(s), Some((gain, _, _))) => {
            if (s.gain - gain).abs() > 1e-9 * gain.abs().max(1.0) {
                return Err(format!("gain {} vs oracle {gain}", s.gain));
            }
            let left = case.x.iter().filter(|r| r[s.feature] <= s.threshold).count();
            if left != s.left_count {
                return Err("threshold does not reproduce the reported partition".into());
            }
            Ok(())
        }
        (a, b) => Err(format!("split {:?} vs oracle {:?}", a.map(|s| s.gain), b.map(|b| b.0))),
    }
}

/// Central differences of `f` at `params`.
pub fn numeric_gradient(params: &[f64], f: impl Fn(&[f64]) -> f64, step: f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..params.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + step;
            let up = f(&p);
            p[i] = orig - step;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-300)
}

pub fn random_problem(seed: u64, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let y = (0..n).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))).collect();
    (x, y)
}

/// Worst relative gradient error of the logistic objective over a few
/// random problems and parameter points.
pub fn logistic_gradient_error() -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let (x, y) = random_problem(seed, 30, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let params: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, analytic) = LogisticModel::objective(&params, &x, &y, 0.7);
        let numeric = numeric_gradient(&params, |p| LogisticModel::objective(p, &x, &y, 0.7).0, 1e-6);
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    worst
}

/// Same for the MLP's mean BCE.
pub fn mlp_gradient_error() -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        let (x, y) = random_problem(seed, 25, 5);
        let model = MlpModel::initialize(5, seed);
        let (_, analytic) = model.loss_and_gradient(&x, &y);
        let numeric = numeric_gradient(
            &model.params(),
            |p| {
                let mut m = model.clone();
                m.set_params(p);
                m.loss_and_gradient(&x, &y).0
            },
            1e-6,
        );
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    worst
}

/// Checks the four-column block of each proxy against the two records.
pub fn feature_blocks_hold(features: &[f64], left: &ModelRecord, right: &ModelRecord) -> bool {
    Proxy::ALL.iter().enumerate().all(|(k, &p)| {
        let (a, b) = (left.proxies.get(p), right.proxies.get(p));
        let block = &features[4 * k..4 * k + 4];
        block[0] == a - b && block[1] == a * b && block[2] == a && block[3] == b
    })
}
