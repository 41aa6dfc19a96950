use std::fmt;
use std::str::FromStr;

use ltcrank::evaluation::{Backbone, Baseline};

/// A predictor named on the command line: a proxy or combo baseline, or a
/// supervised backbone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorSpec {
    Baseline(Baseline),
    Supervised(Backbone),
}

impl PredictorSpec {
    pub fn name(self) -> &'static str {
        match self {
            PredictorSpec::Baseline(b) => b.name(),
            PredictorSpec::Supervised(b) => b.as_str(),
        }
    }
}

impl fmt::Display for PredictorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredictorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(b) = s.parse::<Backbone>() {
            return Ok(PredictorSpec::Supervised(b));
        }
        s.parse::<Baseline>()
            .map(PredictorSpec::Baseline)
            .map_err(|_| format!("unknown predictor `{s}` (a proxy, combo or backbone name)"))
    }
}
