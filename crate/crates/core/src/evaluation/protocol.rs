use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pairwise_accuracy_counted, AccuracyReport, TiePolicy};
use crate::dataset::ModelSet;
use crate::error::{Error, Result};
use crate::gbdt::{fit_gbdt, gain_importance, GbdtConfig, GbdtModel, ImportanceReport};
use crate::learners::{fit_logistic, fit_mlp, Comparator, LogisticModel, MlpModel, TrainConfig};
use crate::pairing::{enumerate_pairs, PairDataset, TaskId};
use crate::predictor::ComparatorPredictor;

/// Train/test partition of model ids for one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub train_ids: Vec<u32>,
    pub test_ids: Vec<u32>,
}

impl SplitPlan {
    /// Shuffles `ids` with a ChaCha8 stream seeded by `seed`; the first
    /// `⌊fraction·n⌋` ids train. Both halves come back sorted.
    pub fn new(ids: &[u32], seed: u64, train_fraction: f64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Domain(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        let n_train = (train_fraction * ids.len() as f64).floor() as usize;
        if n_train < 2 || ids.len() - n_train < 2 {
            return Err(Error::Domain(format!(
                "a split of {} models leaves fewer than two on one side",
                ids.len()
            )));
        }
        let mut shuffled = ids.to_vec();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut train_ids = shuffled[..n_train].to_vec();
        let mut test_ids = shuffled[n_train..].to_vec();
        train_ids.sort_unstable();
        test_ids.sort_unstable();
        Ok(Self {
            seed,
            train_ids,
            test_ids,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backbone {
    Logistic,
    Mlp,
    Gbdt,
}

impl Backbone {
    pub const ALL: &'static [Backbone] = &[Backbone::Logistic, Backbone::Mlp, Backbone::Gbdt];

    pub fn as_str(self) -> &'static str {
        match self {
            Backbone::Logistic => "logistic",
            Backbone::Mlp => "mlp",
            Backbone::Gbdt => "gbdt",
        }
    }
}

impl std::fmt::Display for Backbone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Backbone {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" | "lr" | "logistic_regression" => Ok(Backbone::Logistic),
            "mlp" => Ok(Backbone::Mlp),
            "gbdt" | "lightgbm" => Ok(Backbone::Gbdt),
            other => Err(format!("unknown backbone `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backbone", content = "model", rename_all = "snake_case")]
pub enum FittedComparator {
    Logistic(LogisticModel),
    Mlp(MlpModel),
    Gbdt(GbdtModel),
}

impl FittedComparator {
    pub fn backbone(&self) -> Backbone {
        match self {
            FittedComparator::Logistic(_) => Backbone::Logistic,
            FittedComparator::Mlp(_) => Backbone::Mlp,
            FittedComparator::Gbdt(_) => Backbone::Gbdt,
        }
    }

    pub fn as_comparator(&self) -> &dyn Comparator {
        match self {
            FittedComparator::Logistic(m) => m,
            FittedComparator::Mlp(m) => m,
            FittedComparator::Gbdt(m) => m,
        }
    }

    pub fn importance(&self) -> Option<Result<ImportanceReport>> {
        match self {
            FittedComparator::Gbdt(m) => Some(gain_importance(m)),
            _ => None,
        }
    }
}

impl Comparator for FittedComparator {
    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.as_comparator().predict_proba(x)
    }
}

/// Versioned on-disk form of one fitted comparator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub format_version: u32,
    pub seed: u64,
    pub train_task: TaskId,
    pub train_ids: Vec<u32>,
    #[serde(flatten)]
    pub model: FittedComparator,
}

impl ModelDump {
    pub const FORMAT_VERSION: u32 = 1;

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: ModelDump = serde_json::from_str(text)?;
        if dump.format_version != Self::FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model format version {}",
                dump.format_version
            )));
        }
        Ok(dump)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub seeds: Vec<u64>,
    pub train_fraction: f64,
    pub augment_flip: bool,
    pub gbdt: GbdtConfig,
    pub logistic: TrainConfig,
    pub mlp: TrainConfig,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            seeds: (0..20).collect(),
            train_fraction: 0.6,
            augment_flip: false,
            gbdt: GbdtConfig::default(),
            logistic: TrainConfig::logistic(),
            mlp: TrainConfig::mlp(),
            jobs: None,
        }
    }
}

impl ProtocolConfig {
    /// `n_runs` consecutive seeds starting at `seed_base`.
    pub fn with_seeds(mut self, seed_base: u64, n_runs: usize) -> Self {
        self.seeds = (0..n_runs as u64).map(|i| seed_base + i).collect();
        self
    }

    pub fn fit(&self, backbone: Backbone, data: &PairDataset, seed: u64) -> Result<FittedComparator> {
        let x = &data.features;
        let y = &data.labels;
        Ok(match backbone {
            Backbone::Logistic => {
                FittedComparator::Logistic(fit_logistic(x, y, &self.logistic.clone().with_seed(seed))?)
            }
            Backbone::Mlp => FittedComparator::Mlp(fit_mlp(x, y, &self.mlp.clone().with_seed(seed))?),
            Backbone::Gbdt => FittedComparator::Gbdt(fit_gbdt(x, y, &self.gbdt.clone().with_seed(seed))?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub plan: SplitPlan,
    pub n_train_pairs: usize,
    /// Held-out accuracy per evaluation task, indexed by `TaskId::index`.
    pub accuracy: [f64; 3],
    pub n_test_pairs: [usize; 3],
    pub model: FittedComparator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    pub message: String,
}

/// Every run of one backbone trained on one task, evaluated on all tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub backbone: Backbone,
    pub train_task: TaskId,
    pub runs: Vec<RunOutcome>,
    pub failures: Vec<RunFailure>,
}

impl ProtocolOutcome {
    pub fn report(&self, eval_task: TaskId) -> AccuracyReport {
        let k = eval_task.index();
        let runs = self
            .runs
            .iter()
            .map(|r| (r.plan.seed, r.accuracy[k], r.n_test_pairs[k]))
            .collect();
        AccuracyReport::from_runs(eval_task, self.backbone.as_str(), runs, self.failures.clone())
    }

    /// Per-run importance averaged over runs (GBDT only).
    pub fn mean_importance(&self) -> Option<Result<ImportanceReport>> {
        let reports: Option<Result<Vec<_>>> = self.runs.iter().map(|r| r.model.importance()).collect();
        reports.map(|r| r.and_then(|r| ImportanceReport::mean(&r)))
    }
}

fn run_once(
    set: &ModelSet,
    backbone: Backbone,
    train_task: TaskId,
    cfg: &ProtocolConfig,
    seed: u64,
) -> Result<RunOutcome> {
    let plan = SplitPlan::new(&set.ids(), seed, cfg.train_fraction)?;
    let train = PairDataset::build(set, &plan.train_ids, train_task, cfg.augment_flip)?;
    let model = cfg.fit(backbone, &train, seed)?;
    let test_pairs = enumerate_pairs(&set.subset(&plan.test_ids)?);
    let predictor = ComparatorPredictor(model.as_comparator());
    let mut accuracy = [0.0; 3];
    let mut n_test_pairs = [0; 3];
    for &task in TaskId::ALL {
        let (acc, n) = pairwise_accuracy_counted(set, &predictor, task, &test_pairs, TiePolicy::Exclude)?;
        accuracy[task.index()] = acc;
        n_test_pairs[task.index()] = n;
    }
    Ok(RunOutcome {
        plan,
        n_train_pairs: train.len(),
        accuracy,
        n_test_pairs,
        model,
    })
}

/// Runs the repeated-split protocol. Failed runs (e.g. single-class
/// training labels) are recorded and excluded; if every run fails the
/// first failure is returned.
pub fn run_protocol_full(
    set: &ModelSet,
    backbone: Backbone,
    train_task: TaskId,
    cfg: &ProtocolConfig,
) -> Result<ProtocolOutcome> {
    if set.len() < 10 {
        return Err(Error::Domain(format!(
            "the split protocol needs at least 10 models, got {}",
            set.len()
        )));
    }
    let work = || -> Vec<Result<RunOutcome>> {
        cfg.seeds
            .par_iter()
            .map(|&seed| run_once(set, backbone, train_task, cfg, seed))
            .collect()
    };
    let results = match cfg.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut first_error = None;
    for (run, (result, &seed)) in results.into_iter().zip(&cfg.seeds).enumerate() {
        match result {
            Ok(r) => runs.push(r),
            Err(e) => {
                failures.push(RunFailure {
                    run,
                    seed,
                    message: e.to_string(),
                });
                first_error.get_or_insert(Error::Run {
                    run,
                    seed,
                    source: Box::new(e),
                });
            }
        }
    }
    if runs.is_empty() {
        return Err(first_error.unwrap_or_else(|| Error::Domain("no seeds given".into())));
    }
    Ok(ProtocolOutcome {
        backbone,
        train_task,
        runs,
        failures,
    })
}

/// Fits `backbone` on every non-tied pair of `set`, seeded with the first
/// configured seed.
pub fn fit_on_all(set: &ModelSet, backbone: Backbone, task: TaskId, cfg: &ProtocolConfig) -> Result<FittedComparator> {
    let data = PairDataset::build(set, &set.ids(), task, cfg.augment_flip)?;
    cfg.fit(backbone, &data, cfg.seeds.first().copied().unwrap_or(0))
}

pub fn run_protocol(
    set: &ModelSet,
    backbone: Backbone,
    train_task: TaskId,
    eval_task: TaskId,
    cfg: &ProtocolConfig,
) -> Result<AccuracyReport> {
    Ok(run_protocol_full(set, backbone, train_task, cfg)?.report(eval_task))
}
