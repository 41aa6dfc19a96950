use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{DataConfig, LengthFilter, ModelSet, Objective, PretrainConfig};
use crate::error::Result;
use crate::pairing::{outcome_of, TaskId};
use crate::predictor::{pair_credit, PairPredictor};

/// Pretraining factor whose levels define the groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Objective,
    DataConfig,
    /// Domain tagging crossed with length filter.
    TaggingAndLength,
}

impl Factor {
    pub const ALL: &'static [Factor] = &[Factor::Objective, Factor::DataConfig, Factor::TaggingAndLength];

    pub fn as_str(self) -> &'static str {
        match self {
            Factor::Objective => "objective",
            Factor::DataConfig => "data_config",
            Factor::TaggingAndLength => "tagging_length",
        }
    }

    fn level(self, c: &PretrainConfig) -> (usize, String) {
        let pos = |v: &str, all: &[&str]| all.iter().position(|a| *a == v).unwrap_or(usize::MAX);
        match self {
            Factor::Objective => {
                let names: Vec<&str> = Objective::ALL.iter().map(|o| o.as_str()).collect();
                (pos(c.objective.as_str(), &names), c.objective.as_str().to_string())
            }
            Factor::DataConfig => {
                let names: Vec<&str> = DataConfig::ALL.iter().map(|o| o.as_str()).collect();
                (pos(c.data_config.as_str(), &names), c.data_config.as_str().to_string())
            }
            Factor::TaggingAndLength => {
                let names: Vec<&str> = LengthFilter::ALL.iter().map(|o| o.as_str()).collect();
                let l = pos(c.length_filter.as_str(), &names);
                let tag = if c.domain_tagging { "tag" } else { "notag" };
                (
                    usize::from(c.domain_tagging) * names.len() + l,
                    format!("{tag}-{}", c.length_filter),
                )
            }
        }
    }

    /// Whether two configs agree on every field outside this factor.
    fn same_elsewhere(self, a: &PretrainConfig, b: &PretrainConfig) -> bool {
        let obj = a.objective == b.objective;
        let dc = a.data_config == b.data_config;
        let lr = a.learning_rate == b.learning_rate;
        let tl = a.domain_tagging == b.domain_tagging && a.length_filter == b.length_filter;
        match self {
            Factor::Objective => dc && lr && tl,
            Factor::DataConfig => obj && lr && tl,
            Factor::TaggingAndLength => obj && dc && lr,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Factor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "objective" => Ok(Factor::Objective),
            "data_config" | "data" | "dc" => Ok(Factor::DataConfig),
            "tagging_length" | "tagging" | "length" => Ok(Factor::TaggingAndLength),
            other => Err(format!("unknown factor `{other}`")),
        }
    }
}

/// Between-group accuracy matrix. `cells[a][b]` is `None` on the diagonal
/// and wherever no qualifying pair exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedMatrix {
    pub factor: Factor,
    pub task: TaskId,
    pub predictor: String,
    pub groups: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
    pub counts: Vec<Vec<usize>>,
}

/// Accuracy of `predictor` on pairs from two different groups that share
/// every other pretraining setting. Fewer than two groups gives an empty
/// matrix.
pub fn grouped_accuracy(
    set: &ModelSet,
    predictor: &dyn PairPredictor,
    predictor_name: &str,
    task: TaskId,
    factor: Factor,
) -> Result<GroupedMatrix> {
    let mut levels: Vec<(usize, String)> = set.records().iter().map(|r| factor.level(&r.config)).collect();
    levels.sort();
    levels.dedup();
    let mut matrix = GroupedMatrix {
        factor,
        task,
        predictor: predictor_name.to_string(),
        groups: Vec::new(),
        cells: Vec::new(),
        counts: Vec::new(),
    };
    if levels.len() < 2 {
        return Ok(matrix);
    }
    let g = levels.len();
    let group_of = |c: &PretrainConfig| levels.iter().position(|l| *l == factor.level(c)).unwrap_or(0);
    let mut credit = vec![vec![0.0; g]; g];
    let mut counts = vec![vec![0usize; g]; g];
    for a in set.records() {
        for b in set.records() {
            let (ga, gb) = (group_of(&a.config), group_of(&b.config));
            if ga == gb || !factor.same_elsewhere(&a.config, &b.config) {
                continue;
            }
            if let Some(c) = pair_credit(predictor.win_probability(a, b), outcome_of(a, b, task)) {
                credit[ga][gb] += c;
                counts[ga][gb] += 1;
            }
        }
    }
    matrix.groups = levels.into_iter().map(|l| l.1).collect();
    matrix.cells = (0..g)
        .map(|i| {
            (0..g)
                .map(|j| (counts[i][j] > 0).then(|| credit[i][j] / counts[i][j] as f64))
                .collect()
        })
        .collect();
    matrix.counts = counts;
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_canonical, Proxy};
    use crate::predictor::{OraclePredictor, ProxyPredictor};

    #[test]
    fn clm_vs_sc_uses_matched_pairs() {
        let set = load_canonical().unwrap();
        let m = grouped_accuracy(&set, &ProxyPredictor(Proxy::PplSc), "ppl_sc", TaskId::SftCms, Factor::Objective).unwrap();
        let clm = m.groups.iter().position(|g| g == "clm").unwrap();
        let sc = m.groups.iter().position(|g| g == "sc").unwrap();
        assert!(m.counts[clm][sc] >= 2);
        assert_eq!(m.counts[clm][sc], m.counts[sc][clm]);
        for i in 0..m.groups.len() {
            assert_eq!(m.cells[i][i], None);
            for v in m.cells[i].iter().flatten() {
                assert!((0.0..=1.0).contains(v));
            }
        }
    }

    #[test]
    fn oracle_cells_are_one() {
        let set = load_canonical().unwrap();
        for &factor in Factor::ALL {
            let m = grouped_accuracy(&set, &OraclePredictor(TaskId::SftRag), "oracle", TaskId::SftRag, factor).unwrap();
            assert!(m.cells.iter().flatten().flatten().all(|v| *v == 1.0));
        }
    }

    #[test]
    fn single_group_is_empty() {
        let set = load_canonical().unwrap();
        let clm_only: Vec<u32> = set
            .records()
            .iter()
            .filter(|r| r.config.objective == Objective::Clm)
            .map(|r| r.id)
            .collect();
        let sub = set.subset(&clm_only).unwrap();
        let m = grouped_accuracy(&sub, &ProxyPredictor(Proxy::PplClm), "ppl_clm", TaskId::SftCms, Factor::Objective).unwrap();
        assert!(m.groups.is_empty() && m.cells.is_empty());
    }
}
