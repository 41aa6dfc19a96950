use serde::{Deserialize, Serialize};

use super::ProtocolOutcome;
use crate::dataset::ModelSet;
use crate::error::{Error, Result};
use crate::pairing::{enumerate_pairs, outcome_of, TaskId};
use crate::predictor::{pair_credit, ComparatorPredictor, PairPredictor};

/// One evaluated pair: absolute SFT gap and the credit the predictor earned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCredit {
    pub gap: f64,
    pub credit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileBucket {
    /// 1-based, smallest gaps first.
    pub index: usize,
    pub min_gap: f64,
    pub max_gap: f64,
    pub pairs: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileReport {
    pub task: TaskId,
    pub predictor: String,
    pub buckets: Vec<QuantileBucket>,
}

/// Sorts by gap (stable) and cuts into `n_buckets` equal-frequency
/// buckets; the first `len % n_buckets` buckets take one extra pair.
pub fn bucketize(mut items: Vec<GapCredit>, n_buckets: usize) -> Result<Vec<QuantileBucket>> {
    if n_buckets == 0 || items.len() < n_buckets {
        return Err(Error::Domain(format!(
            "{} pairs cannot fill {n_buckets} buckets",
            items.len()
        )));
    }
    items.sort_by(|a, b| a.gap.total_cmp(&b.gap));
    let base = items.len() / n_buckets;
    let extra = items.len() % n_buckets;
    let mut start = 0;
    let mut buckets = Vec::with_capacity(n_buckets);
    for b in 0..n_buckets {
        let size = base + usize::from(b < extra);
        let chunk = &items[start..start + size];
        start += size;
        buckets.push(QuantileBucket {
            index: b + 1,
            min_gap: chunk[0].gap,
            max_gap: chunk[size - 1].gap,
            pairs: size,
            accuracy: chunk.iter().map(|c| c.credit).sum::<f64>() / size as f64,
        });
    }
    Ok(buckets)
}

pub(super) fn gap_credits(
    set: &ModelSet,
    predictor: &dyn PairPredictor,
    task: TaskId,
    pairs: &[(u32, u32)],
) -> Result<Vec<GapCredit>> {
    let mut out = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        let (left, right) = (set.get(a)?, set.get(b)?);
        if let Some(credit) = pair_credit(predictor.win_probability(left, right), outcome_of(left, right, task)) {
            out.push(GapCredit {
                gap: (left.sft.get(task) - right.sft.get(task)).abs(),
                credit,
            });
        }
    }
    Ok(out)
}

/// Bucketed accuracy of `predictor` over every non-tied pair of `set`.
pub fn quantile_buckets(
    set: &ModelSet,
    predictor: &dyn PairPredictor,
    predictor_name: &str,
    task: TaskId,
    n_buckets: usize,
) -> Result<QuantileReport> {
    let items = gap_credits(set, predictor, task, &enumerate_pairs(set))?;
    Ok(QuantileReport {
        task,
        predictor: predictor_name.to_string(),
        buckets: bucketize(items, n_buckets)?,
    })
}

impl ProtocolOutcome {
    /// Held-out pairs of every run, pooled, each scored by that run's model.
    pub fn pooled_gap_credits(&self, set: &ModelSet, task: TaskId) -> Result<Vec<GapCredit>> {
        let mut out = Vec::new();
        for run in &self.runs {
            let pairs = enumerate_pairs(&set.subset(&run.plan.test_ids)?);
            let predictor = ComparatorPredictor(run.model.as_comparator());
            out.extend(gap_credits(set, &predictor, task, &pairs)?);
        }
        Ok(out)
    }

    pub fn quantile_buckets(&self, set: &ModelSet, task: TaskId, n_buckets: usize) -> Result<QuantileReport> {
        Ok(QuantileReport {
            task,
            predictor: self.backbone.as_str().to_string(),
            buckets: bucketize(self.pooled_gap_credits(set, task)?, n_buckets)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_canonical, Proxy};
    use crate::predictor::{OraclePredictor, ProxyPredictor};

    #[test]
    fn equal_frequency_sizes() {
        let items: Vec<GapCredit> = (0..23)
            .map(|i| GapCredit {
                gap: (23 - i) as f64,
                credit: 1.0,
            })
            .collect();
        let b = bucketize(items, 5).unwrap();
        assert_eq!(b.iter().map(|b| b.pairs).collect::<Vec<_>>(), vec![5, 5, 5, 4, 4]);
        assert_eq!(b[0].min_gap, 1.0);
        assert_eq!(b[4].max_gap, 23.0);
        assert!(b.windows(2).all(|w| w[0].max_gap <= w[1].min_gap));
    }

    #[test]
    fn too_few_pairs() {
        assert!(bucketize(vec![GapCredit { gap: 1.0, credit: 1.0 }], 5).is_err());
        assert!(bucketize(Vec::new(), 0).is_err());
    }

    #[test]
    fn oracle_is_perfect_everywhere() {
        let set = load_canonical().unwrap();
        let r = quantile_buckets(&set, &OraclePredictor(TaskId::SftCbqa), "oracle", TaskId::SftCbqa, 5).unwrap();
        assert!(r.buckets.iter().all(|b| b.accuracy == 1.0));
        assert_eq!(r.buckets.iter().map(|b| b.pairs).sum::<usize>(), 1225 - 19);
    }

    #[test]
    fn kshot_rag_improves_with_gap() {
        let set = load_canonical().unwrap();
        for &task in TaskId::ALL {
            let r = quantile_buckets(&set, &ProxyPredictor(Proxy::KshotRag), "kshot_rag", task, 5).unwrap();
            assert!(r.buckets[4].accuracy > r.buckets[0].accuracy);
        }
    }
}
