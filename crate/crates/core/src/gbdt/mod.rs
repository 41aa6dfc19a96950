//! Gradient-boosted decision trees for binary log-loss.
//!
//! Each boosting round fits one tree to the gradients `g = p − y` and
//! hessians `h = p(1 − p)` of the current ensemble. Trees grow leaf-wise:
//! the leaf whose best split has the largest gain is split next, until the
//! tree has `num_leaves` leaves or no admissible split remains. Split search
//! is exact over sorted feature values, with thresholds at midpoints between
//! consecutive distinct values.

mod importance;
mod split;

pub use importance::{gain_importance, ImportanceReport};
pub use split::{
    find_best_split, leaf_weight, node_score, split_gain, threshold_l1, SplitCandidate,
    MIN_CHILD_HESSIAN,
};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{bce_loss, check_training_data, sigmoid, Comparator};
use split::{best_split_on_feature, pick_best};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub num_leaves: usize,
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub min_data_in_leaf: usize,
    pub min_gain_to_split: f64,
    pub lambda_l1: f64,
    pub lambda_l2: f64,
    pub feature_fraction: f64,
    pub bagging_fraction: f64,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            num_leaves: 31,
            learning_rate: 0.1,
            n_estimators: 100,
            min_data_in_leaf: 20,
            min_gain_to_split: 0.0,
            lambda_l1: 0.0,
            lambda_l2: 0.0,
            feature_fraction: 1.0,
            bagging_fraction: 1.0,
            seed: 0,
        }
    }
}

impl GbdtConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if self.num_leaves < 2 {
            return Err(Error::Domain("num_leaves must be at least 2".into()));
        }
        if !in_unit(self.learning_rate)
            || !in_unit(self.feature_fraction)
            || !in_unit(self.bagging_fraction)
        {
            return Err(Error::Domain(
                "learning_rate, feature_fraction and bagging_fraction must lie in (0, 1]".into(),
            ));
        }
        if self.lambda_l1 < 0.0 || self.lambda_l2 < 0.0 || self.min_gain_to_split < 0.0 {
            return Err(Error::Domain("regularization terms must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        /// Loss reduction recorded when the split was made.
        gain: f64,
        count: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        /// Log-odds contribution, already scaled by the learning rate.
        value: f64,
        count: usize,
    },
}

impl TreeNode {
    /// Descends left when `x[feature] <= threshold`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.num_leaves() + right.num_leaves(),
        }
    }

    /// Visits every split as `(feature, threshold, gain)`.
    pub fn for_each_split(&self, f: &mut impl FnMut(usize, f64, f64)) {
        if let TreeNode::Split {
            feature,
            threshold,
            gain,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *threshold, *gain);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }

    pub fn leaf_counts(&self) -> Vec<usize> {
        match self {
            TreeNode::Leaf { count, .. } => vec![*count],
            TreeNode::Split { left, right, .. } => {
                let mut v = left.leaf_counts();
                v.extend(right.leaf_counts());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub base_score: f64,
    pub trees: Vec<TreeNode>,
    pub config: GbdtConfig,
    pub n_features: usize,
}

impl GbdtModel {
    /// An ensemble with no trees.
    pub fn constant(base_score: f64, n_features: usize) -> Self {
        Self {
            base_score,
            trees: Vec::new(),
            config: GbdtConfig::default(),
            n_features,
        }
    }

    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

impl Comparator for GbdtModel {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw_score(x))
    }
}

/// Per-tree bookkeeping collected during training.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeTrace {
    /// Sum of the gains recorded on the tree's splits.
    pub recorded_gain: f64,
    /// `½[Σ_leaves score(leaf) − score(root)]` from the final partition.
    pub surrogate_reduction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    /// Training BCE before any tree and after each tree.
    pub train_loss: Vec<f64>,
    pub trees: Vec<TreeTrace>,
}

pub fn fit_gbdt<R: AsRef<[f64]>>(x: &[R], y: &[f64], cfg: &GbdtConfig) -> Result<GbdtModel> {
    fit_gbdt_traced(x, y, cfg).map(|(m, _)| m)
}

/// Fits the ensemble and also returns the per-iteration training trace.
pub fn fit_gbdt_traced<R: AsRef<[f64]>>(
    x: &[R],
    y: &[f64],
    cfg: &GbdtConfig,
) -> Result<(GbdtModel, FitTrace)> {
    cfg.validate()?;
    let dim = check_training_data(x, y)?;
    let n = x.len();
    if n < 2 * cfg.min_data_in_leaf {
        return Err(Error::DegenerateFit(format!(
            "{n} samples cannot fill two leaves of {} samples",
            cfg.min_data_in_leaf
        )));
    }

    let mean = y.iter().sum::<f64>() / n as f64;
    let base_score = (mean / (1.0 - mean)).ln();
    let mut scores = vec![base_score; n];
    let mut trees = Vec::new();
    let mut trace = FitTrace::default();
    let loss = |scores: &[f64]| -> Result<f64> {
        let p: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
        bce_loss(&p, y)
    };
    trace.train_loss.push(loss(&scores)?);

    // Feature columns sorted once; leaves keep sorted subsequences.
    let presorted: Vec<Vec<usize>> = (0..dim)
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| {
                x[a].as_ref()[f]
                    .total_cmp(&x[b].as_ref()[f])
                    .then(a.cmp(&b))
            });
            idx
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];

    for _ in 0..cfg.n_estimators {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            grad[i] = p - y[i];
            hess[i] = p * (1.0 - p);
        }

        let in_bag = sample_mask(n, cfg.bagging_fraction, &mut rng);
        let features = sample_features(dim, cfg.feature_fraction, &mut rng);
        let root_sorted: Vec<Vec<usize>> = presorted
            .iter()
            .map(|col| col.iter().copied().filter(|&i| in_bag[i]).collect())
            .collect();

        let (tree, tree_trace) = grow_tree(x, &grad, &hess, root_sorted, &features, cfg);
        if matches!(tree, TreeNode::Leaf { .. }) {
            break;
        }
        for (i, s) in scores.iter_mut().enumerate() {
            *s += tree.predict(x[i].as_ref());
        }
        trees.push(tree);
        trace.trees.push(tree_trace);
        trace.train_loss.push(loss(&scores)?);
    }

    Ok((
        GbdtModel {
            base_score,
            trees,
            config: cfg.clone(),
            n_features: dim,
        },
        trace,
    ))
}

fn sample_mask(n: usize, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    if fraction >= 1.0 {
        return vec![true; n];
    }
    let k = ((n as f64 * fraction).round() as usize).clamp(1, n);
    let mut mask = vec![false; n];
    for i in sample(rng, n, k) {
        mask[i] = true;
    }
    mask
}

fn sample_features(dim: usize, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..dim).collect();
    }
    let k = ((dim as f64 * fraction).round() as usize).clamp(1, dim);
    let mut f = sample(rng, dim, k).into_vec();
    f.sort_unstable();
    f
}

struct OpenLeaf {
    node: usize,
    sorted: Vec<Vec<usize>>,
    grad: f64,
    hess: f64,
    best: Option<SplitCandidate>,
}

enum ArenaNode {
    Leaf {
        value: f64,
        count: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        count: usize,
        left: usize,
        right: usize,
    },
}

fn grow_tree<R: AsRef<[f64]>>(
    x: &[R],
    grad: &[f64],
    hess: &[f64],
    root_sorted: Vec<Vec<usize>>,
    features: &[usize],
    cfg: &GbdtConfig,
) -> (TreeNode, TreeTrace) {
    let members = &root_sorted[0];
    let (g, h) = members
        .iter()
        .fold((0.0, 0.0), |(g, h), &i| (g + grad[i], h + hess[i]));
    let count = members.len();

    let search = |sorted: &[Vec<usize>], totals: (f64, f64)| {
        pick_best(
            features.iter().filter_map(|&f| {
                best_split_on_feature(x, grad, hess, f, &sorted[f], totals, cfg)
            }),
            cfg,
        )
    };

    let mut arena = vec![ArenaNode::Leaf { value: 0.0, count }];
    let best = search(&root_sorted, (g, h));
    let mut open = vec![OpenLeaf {
        node: 0,
        sorted: root_sorted,
        grad: g,
        hess: h,
        best,
    }];
    let mut closed: Vec<OpenLeaf> = Vec::new();
    let mut recorded_gain = 0.0;
    let root_score = node_score(g, h, cfg);

    while open.len() + closed.len() < cfg.num_leaves {
        // Highest gain; ties to the earliest-created leaf.
        let mut pick: Option<usize> = None;
        for (k, leaf) in open.iter().enumerate() {
            if let Some(b) = leaf.best {
                if pick.is_none_or(|p| b.gain > open[p].best.unwrap().gain) {
                    pick = Some(k);
                }
            }
        }
        let Some(k) = pick else { break };
        let leaf = open.remove(k);
        let split = leaf.best.unwrap();
        recorded_gain += split.gain;

        let mut left_sorted = Vec::with_capacity(leaf.sorted.len());
        let mut right_sorted = Vec::with_capacity(leaf.sorted.len());
        for col in &leaf.sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = col
                .iter()
                .partition(|&&i| x[i].as_ref()[split.feature] <= split.threshold);
            left_sorted.push(l);
            right_sorted.push(r);
        }
        let (gl, hl) = (split.left_grad, split.left_hess);
        let (gr, hr) = (leaf.grad - gl, leaf.hess - hl);
        let (left_node, right_node) = (arena.len(), arena.len() + 1);
        arena.push(ArenaNode::Leaf {
            value: 0.0,
            count: split.left_count,
        });
        arena.push(ArenaNode::Leaf {
            value: 0.0,
            count: split.right_count,
        });
        arena[leaf.node] = ArenaNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            gain: split.gain,
            count: split.left_count + split.right_count,
            left: left_node,
            right: right_node,
        };
        let left_best = search(&left_sorted, (gl, hl));
        let right_best = search(&right_sorted, (gr, hr));
        // Children are appended, so creation order is the arena order.
        open.push(OpenLeaf {
            node: left_node,
            sorted: left_sorted,
            grad: gl,
            hess: hl,
            best: left_best,
        });
        open.push(OpenLeaf {
            node: right_node,
            sorted: right_sorted,
            grad: gr,
            hess: hr,
            best: right_best,
        });
        open.sort_by_key(|l| l.node);
        // Leaves with no admissible split stay open but are never picked.
        let (keep, done): (Vec<_>, Vec<_>) = open.into_iter().partition(|l| l.best.is_some());
        open = keep;
        closed.extend(done);
    }

    let mut leaf_total = 0.0;
    for leaf in open.iter().chain(&closed) {
        leaf_total += node_score(leaf.grad, leaf.hess, cfg);
        let value = cfg.learning_rate * leaf_weight(leaf.grad, leaf.hess, cfg);
        if let ArenaNode::Leaf { value: v, .. } = &mut arena[leaf.node] {
            *v = value;
        }
    }
    let trace = TreeTrace {
        recorded_gain,
        surrogate_reduction: 0.5 * (leaf_total - root_score),
    };
    (materialize(&arena, 0), trace)
}

fn materialize(arena: &[ArenaNode], id: usize) -> TreeNode {
    match arena[id] {
        ArenaNode::Leaf { value, count } => TreeNode::Leaf { value, count },
        ArenaNode::Split {
            feature,
            threshold,
            gain,
            count,
            left,
            right,
        } => TreeNode::Split {
            feature,
            threshold,
            gain,
            count,
            left: Box::new(materialize(arena, left)),
            right: Box::new(materialize(arena, right)),
        },
    }
}
