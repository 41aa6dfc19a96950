//! Exact split search over pre-sorted feature columns.

use serde::{Deserialize, Serialize};

use super::GbdtConfig;

/// Minimum hessian sum allowed in either child.
pub const MIN_CHILD_HESSIAN: f64 = 1e-3;

/// Slack on the split-gain comparison so round-off on a zero-gain split
/// is not mistaken for an improvement.
pub(crate) const GAIN_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left_count: usize,
    pub right_count: usize,
    pub left_grad: f64,
    pub left_hess: f64,
}

/// `sign(g) · max(|g| − l1, 0)`.
pub fn threshold_l1(g: f64, l1: f64) -> f64 {
    if l1 <= 0.0 {
        return g;
    }
    g.signum() * (g.abs() - l1).max(0.0)
}

/// Second-order objective score of a node, `G̃² / (H + λ₂)`.
pub fn node_score(grad: f64, hess: f64, cfg: &GbdtConfig) -> f64 {
    let g = threshold_l1(grad, cfg.lambda_l1);
    g * g / (hess + cfg.lambda_l2)
}

/// Loss reduction of a split, `½[score(L) + score(R) − score(parent)]`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, cfg: &GbdtConfig) -> f64 {
    0.5 * (node_score(gl, hl, cfg) + node_score(gr, hr, cfg) - node_score(gl + gr, hl + hr, cfg))
}

/// Optimal leaf output `−G̃ / (H + λ₂)` (before shrinkage).
pub fn leaf_weight(grad: f64, hess: f64, cfg: &GbdtConfig) -> f64 {
    -threshold_l1(grad, cfg.lambda_l1) / (hess + cfg.lambda_l2)
}

/// Point between two consecutive distinct sorted values such that
/// `lo <= t < hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Best split of one feature given the node's sample indices sorted by that
/// feature. Returns `None` when no threshold satisfies the leaf constraints.
pub(crate) fn best_split_on_feature<R: AsRef<[f64]>>(
    x: &[R],
    grad: &[f64],
    hess: &[f64],
    feature: usize,
    sorted: &[usize],
    totals: (f64, f64),
    cfg: &GbdtConfig,
) -> Option<SplitCandidate> {
    let n = sorted.len();
    let (g_total, h_total) = totals;
    let min_leaf = cfg.min_data_in_leaf.max(1);
    if n < 2 * min_leaf {
        return None;
    }
    let mut best: Option<SplitCandidate> = None;
    let (mut gl, mut hl) = (0.0, 0.0);
    for pos in 0..n - 1 {
        let i = sorted[pos];
        gl += grad[i];
        hl += hess[i];
        let left_count = pos + 1;
        if left_count < min_leaf {
            continue;
        }
        let right_count = n - left_count;
        if right_count < min_leaf {
            break;
        }
        let (lo, hi) = (x[i].as_ref()[feature], x[sorted[pos + 1]].as_ref()[feature]);
        if hi <= lo {
            continue;
        }
        let (gr, hr) = (g_total - gl, h_total - hl);
        if hl < MIN_CHILD_HESSIAN || hr < MIN_CHILD_HESSIAN {
            continue;
        }
        let gain = split_gain(gl, hl, gr, hr, cfg);
        if best.is_none_or(|b| gain > b.gain) {
            best = Some(SplitCandidate {
                feature,
                threshold: midpoint(lo, hi),
                gain,
                left_count,
                right_count,
                left_grad: gl,
                left_hess: hl,
            });
        }
    }
    best
}

/// Picks the overall winner: highest gain, ties to the lowest feature index
/// (candidates must be supplied in feature order).
pub(crate) fn pick_best(
    candidates: impl IntoIterator<Item = SplitCandidate>,
    cfg: &GbdtConfig,
) -> Option<SplitCandidate> {
    let mut best: Option<SplitCandidate> = None;
    for c in candidates {
        if c.gain <= cfg.min_gain_to_split + GAIN_EPS {
            continue;
        }
        if best.is_none_or(|b| c.gain > b.gain) {
            best = Some(c);
        }
    }
    best
}

/// Best split for the samples in `indices` over all features of `x`.
///
/// Applies the same constraints as tree growth: each child keeps at least
/// `min_data_in_leaf` samples and [`MIN_CHILD_HESSIAN`] hessian mass, and the
/// gain must exceed `min_gain_to_split`. Ties go to the lowest feature index,
/// then the lowest threshold.
pub fn find_best_split<R: AsRef<[f64]>>(
    x: &[R],
    grad: &[f64],
    hess: &[f64],
    indices: &[usize],
    cfg: &GbdtConfig,
) -> Option<SplitCandidate> {
    if indices.is_empty() {
        return None;
    }
    let dim = x[indices[0]].as_ref().len();
    let totals = indices
        .iter()
        .fold((0.0, 0.0), |(g, h), &i| (g + grad[i], h + hess[i]));
    let candidates = (0..dim).filter_map(|f| {
        let mut sorted = indices.to_vec();
        sorted.sort_by(|&a, &b| x[a].as_ref()[f].total_cmp(&x[b].as_ref()[f]).then(a.cmp(&b)));
        best_split_on_feature(x, grad, hess, f, &sorted, totals, cfg)
    });
    pick_best(candidates, cfg)
}
