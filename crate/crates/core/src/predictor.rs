//! Pairwise predictors: anything that yields `P(left beats right)` for two
//! model records.

use std::collections::HashMap;

use crate::dataset::{ModelRecord, ModelSet, Proxy};
use crate::learners::Comparator;
use crate::pairing::{FeatureVector, Outcome, TaskId};

pub trait PairPredictor: Sync {
    fn win_probability(&self, left: &ModelRecord, right: &ModelRecord) -> f64;
}

fn order_probability(a: f64, b: f64) -> f64 {
    if a > b {
        1.0
    } else if a < b {
        0.0
    } else {
        0.5
    }
}

/// Ranks by a single proxy value: 1 if larger, 0 if smaller, 0.5 if equal.
#[derive(Debug, Clone, Copy)]
pub struct ProxyPredictor(pub Proxy);

impl PairPredictor for ProxyPredictor {
    fn win_probability(&self, left: &ModelRecord, right: &ModelRecord) -> f64 {
        order_probability(left.proxies.get(self.0), right.proxies.get(self.0))
    }
}

/// Ranks by a precomputed per-model score.
#[derive(Debug, Clone)]
pub struct ScorePredictor {
    scores: HashMap<u32, f64>,
}

impl ScorePredictor {
    pub fn new(set: &ModelSet, scores: &[f64]) -> Self {
        Self {
            scores: set.ids().into_iter().zip(scores.iter().copied()).collect(),
        }
    }

    pub fn score(&self, id: u32) -> f64 {
        self.scores[&id]
    }
}

impl PairPredictor for ScorePredictor {
    fn win_probability(&self, left: &ModelRecord, right: &ModelRecord) -> f64 {
        order_probability(self.score(left.id), self.score(right.id))
    }
}

/// A fitted comparator applied to the raw-proxy pair features.
pub struct ComparatorPredictor<'a>(pub &'a dyn Comparator);

impl PairPredictor for ComparatorPredictor<'_> {
    fn win_probability(&self, left: &ModelRecord, right: &ModelRecord) -> f64 {
        self.0.predict_proba(FeatureVector::from_records(left, right).values())
    }
}

/// Knows the true SFT ordering.
#[derive(Debug, Clone, Copy)]
pub struct OraclePredictor(pub TaskId);

impl PairPredictor for OraclePredictor {
    fn win_probability(&self, left: &ModelRecord, right: &ModelRecord) -> f64 {
        order_probability(left.sft.get(self.0), right.sft.get(self.0))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantPredictor(pub f64);

impl PairPredictor for ConstantPredictor {
    fn win_probability(&self, _: &ModelRecord, _: &ModelRecord) -> f64 {
        self.0
    }
}

/// Credit for one prediction against a strict outcome: 1 if the side with
/// probability above 0.5 wins, 0.5 for a probability of exactly 0.5.
/// Returns `None` for tied outcomes.
pub fn pair_credit(probability: f64, outcome: Outcome) -> Option<f64> {
    let label = outcome.as_label()?;
    Some(if probability == 0.5 {
        0.5
    } else if (probability > 0.5) == (label == 1.0) {
        1.0
    } else {
        0.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_canonical;

    #[test]
    fn credit_rules() {
        assert_eq!(pair_credit(0.9, Outcome::LeftWins), Some(1.0));
        assert_eq!(pair_credit(0.9, Outcome::RightWins), Some(0.0));
        assert_eq!(pair_credit(0.5, Outcome::RightWins), Some(0.5));
        assert_eq!(pair_credit(0.1, Outcome::RightWins), Some(1.0));
        assert_eq!(pair_credit(0.1, Outcome::Tie), None);
    }

    #[test]
    fn proxy_predictor_orders_by_value() {
        let set = load_canonical().unwrap();
        let (a, b) = (set.get(1).unwrap(), set.get(2).unwrap());
        let p = ProxyPredictor(Proxy::PplClm);
        assert_eq!(p.win_probability(a, b), 1.0);
        assert_eq!(p.win_probability(b, a), 0.0);
        assert_eq!(p.win_probability(a, a), 0.5);
    }
}
