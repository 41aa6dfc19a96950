//! Borda aggregation of pairwise predictions and top-k recall.

use serde::{Deserialize, Serialize};

use crate::dataset::ModelSet;
use crate::error::{Error, Result};
use crate::evaluation::{fit_on_all, Backbone, ProtocolConfig, ProtocolOutcome, SplitPlan};
use crate::pairing::TaskId;
use crate::predictor::{ComparatorPredictor, PairPredictor};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BordaRanking {
    /// `(id, wins)` in the set's order.
    pub scores: Vec<(u32, usize)>,
    /// Ids by descending wins, ties by ascending id.
    pub ranking: Vec<u32>,
}

impl BordaRanking {
    pub fn score(&self, id: u32) -> Option<usize> {
        self.scores.iter().find(|s| s.0 == id).map(|s| s.1)
    }

    /// 1-based position of `id` in the ranking.
    pub fn position(&self, id: u32) -> Option<usize> {
        self.ranking.iter().position(|r| *r == id).map(|p| p + 1)
    }
}

fn order_by_score(mut scored: Vec<(u32, f64)>) -> Vec<u32> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.into_iter().map(|s| s.0).collect()
}

/// Counts, for each model, the others it beats with probability strictly
/// above 0.5, over all ordered pairs.
pub fn borda_scores(predictor: &dyn PairPredictor, set: &ModelSet) -> BordaRanking {
    let records = set.records();
    let scores: Vec<(u32, usize)> = records
        .iter()
        .map(|a| {
            let wins = records
                .iter()
                .filter(|b| b.id != a.id && predictor.win_probability(a, b) > 0.5)
                .count();
            (a.id, wins)
        })
        .collect();
    let ranking = order_by_score(scores.iter().map(|&(id, s)| (id, s as f64)).collect());
    BordaRanking { scores, ranking }
}

/// Ids by descending true SFT score, ties by ascending id.
pub fn true_ranking(set: &ModelSet, task: TaskId) -> Vec<u32> {
    order_by_score(set.records().iter().map(|r| (r.id, r.sft.get(task))).collect())
}

/// Share of the true top-`k` models found among the first `cutoff`
/// predicted positions.
pub fn top_k_recall(
    predicted: &BordaRanking,
    truth: &ModelSet,
    task: TaskId,
    k: usize,
    cutoff: usize,
) -> Result<f64> {
    let n = truth.len();
    if !(1 <= k && k <= cutoff && cutoff <= n) || predicted.ranking.len() != n {
        return Err(Error::Domain(format!(
            "recall needs 1 <= k <= cutoff <= n, got k={k}, cutoff={cutoff}, n={n}"
        )));
    }
    let top = &true_ranking(truth, task)[..k];
    let head = &predicted.ranking[..cutoff];
    let hits = top.iter().filter(|id| head.contains(id)).count();
    Ok(hits as f64 / k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallCurve {
    pub task: TaskId,
    pub predictor: String,
    pub k: usize,
    /// Recall at cutoffs `k..=n`.
    pub cutoffs: Vec<usize>,
    pub recall: Vec<f64>,
}

impl RecallCurve {
    pub fn new(predicted: &BordaRanking, truth: &ModelSet, task: TaskId, k: usize, name: &str) -> Result<Self> {
        let cutoffs: Vec<usize> = (k..=truth.len()).collect();
        let recall = cutoffs
            .iter()
            .map(|&c| top_k_recall(predicted, truth, task, k, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            task,
            predictor: name.to_string(),
            k,
            cutoffs,
            recall,
        })
    }

    /// Pointwise mean of curves over the same cutoffs.
    pub fn average(curves: &[RecallCurve]) -> Result<Self> {
        let first = curves
            .first()
            .ok_or_else(|| Error::Domain("no recall curves to average".into()))?;
        if curves.iter().any(|c| c.cutoffs != first.cutoffs) {
            return Err(Error::Domain("recall curves cover different cutoffs".into()));
        }
        let n = curves.len() as f64;
        let recall = (0..first.cutoffs.len())
            .map(|i| curves.iter().map(|c| c.recall[i]).sum::<f64>() / n)
            .collect();
        Ok(Self {
            recall,
            ..first.clone()
        })
    }

    /// Smallest cutoff at which recall reaches 1.
    pub fn full_recall_cutoff(&self) -> Option<usize> {
        self.cutoffs
            .iter()
            .zip(&self.recall)
            .find(|(_, r)| **r >= 1.0)
            .map(|(c, _)| *c)
    }
}

/// Which models a supervised comparator is trained on and then ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMode {
    /// Per protocol run: train on the run's train models, rank its test
    /// models, and average the curves over runs.
    #[default]
    HeldOut,
    /// Train once on every non-tied pair, rank every model.
    All,
}

/// Held-out recall curves of a finished protocol, averaged over runs.
pub fn held_out_recall(outcome: &ProtocolOutcome, set: &ModelSet, task: TaskId, k: usize) -> Result<RecallCurve> {
    let curves = outcome
        .runs
        .iter()
        .map(|run| {
            let test = set.subset(&run.plan.test_ids)?;
            let ranking = borda_scores(&ComparatorPredictor(run.model.as_comparator()), &test);
            RecallCurve::new(&ranking, &test, task, k, outcome.backbone.as_str())
        })
        .collect::<Result<Vec<_>>>()?;
    RecallCurve::average(&curves)
}

/// Recall of a fixed predictor on each plan's test models, averaged.
pub fn recall_over_splits(
    predictor: &dyn PairPredictor,
    name: &str,
    set: &ModelSet,
    plans: &[SplitPlan],
    task: TaskId,
    k: usize,
) -> Result<RecallCurve> {
    let curves = plans
        .iter()
        .map(|plan| {
            let test = set.subset(&plan.test_ids)?;
            RecallCurve::new(&borda_scores(predictor, &test), &test, task, k, name)
        })
        .collect::<Result<Vec<_>>>()?;
    RecallCurve::average(&curves)
}

/// Borda ranking of every model by a comparator fitted on all non-tied
/// pairs of `set`.
pub fn rank_all(set: &ModelSet, backbone: Backbone, task: TaskId, cfg: &ProtocolConfig) -> Result<BordaRanking> {
    let model = fit_on_all(set, backbone, task, cfg)?;
    Ok(borda_scores(&ComparatorPredictor(model.as_comparator()), set))
}
