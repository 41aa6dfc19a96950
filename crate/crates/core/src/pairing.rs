//! Pair enumeration, per-task labels and the 20-dimensional comparison
//! features.
//!
//! For a pair `(left, right)` and each proxy `k` (in [`Proxy::ALL`] order)
//! the feature vector holds the block
//!
//! ```text
//! [p_left - p_right, p_left * p_right, p_left, p_right]
//! ```
//!
//! so proxy `k` occupies columns `4k..4k+4`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{ModelRecord, ModelSet, Proxy};
use crate::error::{Error, Result};

pub const FEATURES_PER_PROXY: usize = 4;
pub const FEATURE_DIM: usize = FEATURES_PER_PROXY * 5;

/// Column names of the feature layout.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "ppl_clm_diff",
    "ppl_clm_prod",
    "ppl_clm_left",
    "ppl_clm_right",
    "ppl_sc_diff",
    "ppl_sc_prod",
    "ppl_sc_left",
    "ppl_sc_right",
    "kshot_cms_diff",
    "kshot_cms_prod",
    "kshot_cms_left",
    "kshot_cms_right",
    "kshot_rag_diff",
    "kshot_rag_prod",
    "kshot_rag_left",
    "kshot_rag_right",
    "kshot_cbqa_diff",
    "kshot_cbqa_prod",
    "kshot_cbqa_left",
    "kshot_cbqa_right",
];

/// Feature columns derived from `proxy`.
pub fn proxy_columns(proxy: Proxy) -> Range<usize> {
    let start = proxy.index() * FEATURES_PER_PROXY;
    start..start + FEATURES_PER_PROXY
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskId {
    SftCms,
    SftRag,
    SftCbqa,
}

impl TaskId {
    pub const ALL: &'static [TaskId] = &[TaskId::SftCms, TaskId::SftRag, TaskId::SftCbqa];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::SftCms => "sft_cms",
            TaskId::SftRag => "sft_rag",
            TaskId::SftCbqa => "sft_cbqa",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TaskId::SftCms => "SFT-CMS",
            TaskId::SftRag => "SFT-RAG",
            TaskId::SftCbqa => "SFT-CBQA",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = String;

    /// Accepts both `sft_cms` and the short form `cms`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        match s.strip_prefix("sft_").unwrap_or(&s) {
            "cms" => Ok(TaskId::SftCms),
            "rag" => Ok(TaskId::SftRag),
            "cbqa" => Ok(TaskId::SftCbqa),
            _ => Err(format!(
                "unknown task `{s}` (expected sft_cms, sft_rag or sft_cbqa)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    LeftWins,
    RightWins,
    Tie,
}

impl Outcome {
    /// Binary label `y`; `None` for ties.
    pub fn as_label(self) -> Option<f64> {
        match self {
            Outcome::LeftWins => Some(1.0),
            Outcome::RightWins => Some(0.0),
            Outcome::Tie => None,
        }
    }

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::LeftWins => Outcome::RightWins,
            Outcome::RightWins => Outcome::LeftWins,
            Outcome::Tie => Outcome::Tie,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairLabel {
    pub left_id: u32,
    pub right_id: u32,
    pub task: TaskId,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn from_records(left: &ModelRecord, right: &ModelRecord) -> Self {
        let mut values = [0.0; FEATURE_DIM];
        let (a, b) = (left.proxies.to_array(), right.proxies.to_array());
        for k in 0..a.len() {
            let block = &mut values[k * FEATURES_PER_PROXY..(k + 1) * FEATURES_PER_PROXY];
            block.copy_from_slice(&[a[k] - b[k], a[k] * b[k], a[k], b[k]]);
        }
        FeatureVector(values)
    }

    pub fn values(&self) -> &[f64; FEATURE_DIM] {
        &self.0
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// All unordered pairs as `(lower id, higher id)`, sorted lexicographically.
pub fn enumerate_pairs(set: &ModelSet) -> Vec<(u32, u32)> {
    let mut ids = set.ids();
    ids.sort_unstable();
    let mut pairs = Vec::with_capacity(ids.len() * ids.len().saturating_sub(1) / 2);
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            pairs.push((a, b));
        }
    }
    pairs
}

pub fn outcome_of(left: &ModelRecord, right: &ModelRecord, task: TaskId) -> Outcome {
    let (l, r) = (left.sft.get(task), right.sft.get(task));
    if l > r {
        Outcome::LeftWins
    } else if l < r {
        Outcome::RightWins
    } else {
        Outcome::Tie
    }
}

pub fn make_label(set: &ModelSet, left: u32, right: u32, task: TaskId) -> Result<PairLabel> {
    if left == right {
        return Err(Error::Domain(format!("cannot pair model {left} with itself")));
    }
    let outcome = outcome_of(set.get(left)?, set.get(right)?, task);
    Ok(PairLabel {
        left_id: left,
        right_id: right,
        task,
        outcome,
    })
}

pub fn make_features(set: &ModelSet, left: u32, right: u32) -> Result<FeatureVector> {
    Ok(FeatureVector::from_records(set.get(left)?, set.get(right)?))
}

/// Labelled pairwise training or evaluation data.
#[derive(Debug, Clone, Default)]
pub struct PairDataset {
    pub pairs: Vec<(u32, u32)>,
    pub features: Vec<FeatureVector>,
    pub labels: Vec<f64>,
}

impl PairDataset {
    /// Non-tied pairs among `ids` in canonical orientation, labelled by
    /// `task`. With `augment_flip`, each pair is also added reversed.
    pub fn build(set: &ModelSet, ids: &[u32], task: TaskId, augment_flip: bool) -> Result<Self> {
        let subset = set.subset(ids)?;
        let mut data = PairDataset::default();
        for (a, b) in enumerate_pairs(&subset) {
            let (left, right) = (subset.get(a)?, subset.get(b)?);
            let Some(y) = outcome_of(left, right, task).as_label() else {
                continue;
            };
            data.pairs.push((a, b));
            data.features.push(FeatureVector::from_records(left, right));
            data.labels.push(y);
            if augment_flip {
                data.pairs.push((b, a));
                data.features.push(FeatureVector::from_records(right, left));
                data.labels.push(1.0 - y);
            }
        }
        Ok(data)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
