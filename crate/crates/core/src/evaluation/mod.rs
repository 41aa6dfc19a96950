//! Accuracy protocols: all-pairs proxy baselines, aggregated proxies, the
//! repeated-split protocol for supervised comparators, gap-quantile
//! reliability and factor-grouped accuracy.

mod grouped;
mod protocol;
mod quantile;

pub use grouped::{grouped_accuracy, Factor, GroupedMatrix};
pub use protocol::{
    fit_on_all, run_protocol, run_protocol_full, Backbone, FittedComparator, ModelDump, ProtocolConfig,
    ProtocolOutcome, RunFailure, RunOutcome, SplitPlan,
};
pub use quantile::{bucketize, quantile_buckets, GapCredit, QuantileBucket, QuantileReport};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{normalize_proxies, ModelSet, Normalization, Proxy};
use crate::error::{Error, Result};
use crate::pairing::{enumerate_pairs, outcome_of, TaskId};
use crate::predictor::{pair_credit, PairPredictor, ProxyPredictor, ScorePredictor};

/// Treatment of pairs whose true SFT scores are identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Drop tied pairs from the denominator.
    #[default]
    Exclude,
    /// Count tied pairs as half correct.
    Half,
}

/// Fraction of `pairs` ordered correctly by `predictor`, with the number of
/// pairs that entered the denominator.
pub fn pairwise_accuracy_counted(
    set: &ModelSet,
    predictor: &dyn PairPredictor,
    task: TaskId,
    pairs: &[(u32, u32)],
    ties: TiePolicy,
) -> Result<(f64, usize)> {
    let mut credit = 0.0;
    let mut counted = 0usize;
    for &(a, b) in pairs {
        let (left, right) = (set.get(a)?, set.get(b)?);
        let outcome = outcome_of(left, right, task);
        match pair_credit(predictor.win_probability(left, right), outcome) {
            Some(c) => {
                credit += c;
                counted += 1;
            }
            None if ties == TiePolicy::Half => {
                credit += 0.5;
                counted += 1;
            }
            None => {}
        }
    }
    if counted == 0 {
        return Err(Error::UndefinedAccuracy);
    }
    Ok((credit / counted as f64, counted))
}

pub fn pairwise_accuracy(
    set: &ModelSet,
    predictor: &dyn PairPredictor,
    task: TaskId,
    pairs: &[(u32, u32)],
) -> Result<f64> {
    pairwise_accuracy_counted(set, predictor, task, pairs, TiePolicy::Exclude).map(|(a, _)| a)
}

/// Accuracy of ordering pairs by a single proxy; proxy ties score 0.5 and
/// SFT ties are excluded.
pub fn proxy_accuracy(
    set: &ModelSet,
    proxy: Proxy,
    task: TaskId,
    pairs: &[(u32, u32)],
) -> Result<f64> {
    pairwise_accuracy(set, &ProxyPredictor(proxy), task, pairs)
}

/// Arithmetic combinations of (normalized) proxies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combo {
    MeanOfFive,
    ScPlusRag,
    ScPlusRagMinusClm,
}

impl Combo {
    pub const ALL: &'static [Combo] = &[Combo::MeanOfFive, Combo::ScPlusRag, Combo::ScPlusRagMinusClm];

    pub fn as_str(self) -> &'static str {
        match self {
            Combo::MeanOfFive => "combine_five",
            Combo::ScPlusRag => "ppl_sc_plus_kshot_rag",
            Combo::ScPlusRagMinusClm => "ppl_sc_plus_kshot_rag_minus_ppl_clm",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Combo::MeanOfFive => "Combine Five Proxies",
            Combo::ScPlusRag => "PPL-SC + Kshot-RAG",
            Combo::ScPlusRagMinusClm => "PPL-SC + Kshot-RAG - PPL-CLM",
        }
    }

    pub fn score(self, p: &crate::dataset::ProxyVector) -> f64 {
        match self {
            Combo::MeanOfFive => p.to_array().iter().sum::<f64>() / 5.0,
            Combo::ScPlusRag => p.ppl_sc + p.kshot_rag,
            Combo::ScPlusRagMinusClm => p.ppl_sc + p.kshot_rag - p.ppl_clm,
        }
    }
}

/// Per-model combo scores, in set order, from the set's proxy values as
/// they stand (normalize first).
pub fn combo_scores(set: &ModelSet, combo: Combo) -> Vec<f64> {
    set.records().iter().map(|r| combo.score(&r.proxies)).collect()
}

pub fn combo_accuracy(
    set: &ModelSet,
    combo: Combo,
    task: TaskId,
    pairs: &[(u32, u32)],
) -> Result<f64> {
    let predictor = ScorePredictor::new(set, &combo_scores(set, combo));
    pairwise_accuracy(set, &predictor, task, pairs)
}

/// An unsupervised predictor row of the baseline table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "name")]
pub enum Baseline {
    Proxy(Proxy),
    Combo(Combo),
}

impl Baseline {
    pub fn all() -> Vec<Baseline> {
        Proxy::ALL
            .iter()
            .map(|p| Baseline::Proxy(*p))
            .chain(Combo::ALL.iter().map(|c| Baseline::Combo(*c)))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Proxy(p) => p.as_str(),
            Baseline::Combo(c) => c.as_str(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Baseline::Proxy(p) => p.label(),
            Baseline::Combo(c) => c.label(),
        }
    }

    /// Predictor over `set`; combos normalize the set's proxies with
    /// `normalization` first.
    pub fn predictor(self, set: &ModelSet, normalization: Normalization) -> Box<dyn PairPredictor> {
        match self {
            Baseline::Proxy(p) => Box::new(ProxyPredictor(p)),
            Baseline::Combo(c) => {
                let normalized = normalize_proxies(set, normalization);
                Box::new(ScorePredictor::new(set, &combo_scores(&normalized, c)))
            }
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if let Ok(p) = s.parse::<Proxy>() {
            return Ok(Baseline::Proxy(p));
        }
        Combo::ALL
            .iter()
            .find(|c| c.as_str() == s.trim())
            .map(|c| Baseline::Combo(*c))
            .ok_or_else(|| format!("unknown baseline `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub baseline: Baseline,
    /// One accuracy per requested task, in request order.
    pub accuracy: Vec<f64>,
}

/// All-pairs accuracy of every baseline on every task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineTable {
    pub tasks: Vec<TaskId>,
    pub normalization: Normalization,
    pub ties: TiePolicy,
    pub n_pairs: usize,
    pub rows: Vec<BaselineRow>,
}

impl BaselineTable {
    pub fn get(&self, baseline: Baseline, task: TaskId) -> Option<f64> {
        let col = self.tasks.iter().position(|t| *t == task)?;
        self.rows
            .iter()
            .find(|r| r.baseline == baseline)
            .map(|r| r.accuracy[col])
    }
}

pub fn baseline_table(
    set: &ModelSet,
    tasks: &[TaskId],
    normalization: Normalization,
    ties: TiePolicy,
) -> Result<BaselineTable> {
    let pairs = enumerate_pairs(set);
    let rows = Baseline::all()
        .into_iter()
        .map(|baseline| {
            let predictor = baseline.predictor(set, normalization);
            let accuracy = tasks
                .iter()
                .map(|&t| {
                    pairwise_accuracy_counted(set, predictor.as_ref(), t, &pairs, ties)
                        .map(|(a, _)| a)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BaselineRow { baseline, accuracy })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BaselineTable {
        tasks: tasks.to_vec(),
        normalization,
        ties,
        n_pairs: pairs.len(),
        rows,
    })
}

/// Per-run accuracies with their mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub task: TaskId,
    pub predictor: String,
    pub seeds: Vec<u64>,
    pub per_run: Vec<f64>,
    pub n_pairs: Vec<usize>,
    pub mean: f64,
    pub std: f64,
    pub failures: Vec<RunFailure>,
}

impl AccuracyReport {
    pub fn from_runs(
        task: TaskId,
        predictor: impl Into<String>,
        runs: Vec<(u64, f64, usize)>,
        failures: Vec<RunFailure>,
    ) -> Self {
        let (mean, std) = mean_std(&runs.iter().map(|r| r.1).collect::<Vec<_>>());
        Self {
            task,
            predictor: predictor.into(),
            seeds: runs.iter().map(|r| r.0).collect(),
            per_run: runs.iter().map(|r| r.1).collect(),
            n_pairs: runs.iter().map(|r| r.2).collect(),
            mean,
            std,
            failures,
        }
    }
}

/// Mean and population standard deviation; `(NaN, NaN)` when empty.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// A baseline scored on each split's held-out pairs, the same pairs the
/// supervised protocol evaluates on.
pub fn baseline_over_splits(
    set: &ModelSet,
    baseline: Baseline,
    task: TaskId,
    cfg: &ProtocolConfig,
    normalization: Normalization,
) -> Result<AccuracyReport> {
    let predictor = baseline.predictor(set, normalization);
    let ids = set.ids();
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let plan = SplitPlan::new(&ids, seed, cfg.train_fraction)?;
        let pairs = enumerate_pairs(&set.subset(&plan.test_ids)?);
        let (acc, n) =
            pairwise_accuracy_counted(set, predictor.as_ref(), task, &pairs, TiePolicy::Exclude)?;
        runs.push((seed, acc, n));
    }
    Ok(AccuracyReport::from_runs(task, baseline.name(), runs, Vec::new()))
}
