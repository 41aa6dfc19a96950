use serde::{Deserialize, Serialize};

use super::GbdtModel;
use crate::dataset::Proxy;
use crate::error::{Error, Result};
use crate::pairing::{proxy_columns, FEATURE_DIM};

/// Gain importance per feature column, summed per proxy and normalized to a
/// distribution over the five proxies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub per_feature_gain: Vec<f64>,
    pub per_proxy_gain: [f64; 5],
    pub normalized: [f64; 5],
}

impl ImportanceReport {
    pub fn from_feature_gains(per_feature_gain: Vec<f64>) -> Result<Self> {
        if per_feature_gain.len() != FEATURE_DIM {
            return Err(Error::Domain(format!(
                "importance needs {FEATURE_DIM} feature gains, got {}",
                per_feature_gain.len()
            )));
        }
        let mut per_proxy_gain = [0.0; 5];
        for proxy in Proxy::ALL {
            per_proxy_gain[proxy.index()] = per_feature_gain[proxy_columns(*proxy)].iter().sum();
        }
        let total: f64 = per_proxy_gain.iter().sum();
        let normalized = if total > 0.0 {
            per_proxy_gain.map(|g| g / total)
        } else {
            [0.2; 5]
        };
        Ok(Self {
            per_feature_gain,
            per_proxy_gain,
            normalized,
        })
    }

    /// Element-wise mean of several reports (e.g. one per protocol run).
    pub fn mean(reports: &[ImportanceReport]) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::Domain("no importance reports to average".into()));
        }
        let n = reports.len() as f64;
        let mut gains = vec![0.0; FEATURE_DIM];
        let mut normalized = [0.0; 5];
        for r in reports {
            for (g, v) in gains.iter_mut().zip(&r.per_feature_gain) {
                *g += v / n;
            }
            for (a, v) in normalized.iter_mut().zip(&r.normalized) {
                *a += v / n;
            }
        }
        let mut out = Self::from_feature_gains(gains)?;
        // Average of per-run distributions, not the distribution of averages.
        out.normalized = normalized;
        Ok(out)
    }

    pub fn top_proxy(&self) -> Proxy {
        let mut best = 0;
        for k in 1..5 {
            if self.normalized[k] > self.normalized[best] {
                best = k;
            }
        }
        Proxy::ALL[best]
    }
}

/// Sums the recorded split gains per feature over every tree.
pub fn gain_importance(model: &GbdtModel) -> Result<ImportanceReport> {
    let mut gains = vec![0.0; model.n_features];
    for tree in &model.trees {
        tree.for_each_split(&mut |feature, _, gain| gains[feature] += gain);
    }
    ImportanceReport::from_feature_gains(gains)
}
