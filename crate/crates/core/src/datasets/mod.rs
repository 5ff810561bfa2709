//! Training-set generation, splitting and persistence.
//!
//! Every dataset row is `(theta1, theta2, lambda, target, group_id)`. Indicator
//! datasets carry `Z ∈ {0,1}` as the target; ECDF datasets carry `F`.

mod generate;
mod io;
mod split;

pub use generate::{
    ecdf_targets, gen_alffi_onoff, gen_ecdf_onoff, gen_ecdf_sir, onoff_statistics, sir_statistics,
    SirObservation,
};
pub use io::{meta_path, read_dataset, write_dataset};
pub use split::{split_dataset, Split, SplitSpec};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::simulators::SirScenario;
use crate::{Error, Result};

pub const FEATURES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub theta1: f64,
    pub theta2: f64,
    pub lambda: f64,
    pub target: f64,
    pub group_id: u64,
}

impl Record {
    pub fn features(&self) -> [f64; FEATURES] {
        [self.theta1, self.theta2, self.lambda]
    }
}

/// Axis-aligned uniform prior over the two model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorBox {
    pub theta1: (f64, f64),
    pub theta2: (f64, f64),
}

impl PriorBox {
    pub const ONOFF: PriorBox = PriorBox {
        theta1: (0.0, 20.0),
        theta2: (0.0, 20.0),
    };

    /// Default (α, β) box around the default truth point.
    pub const SIR: PriorBox = PriorBox {
        theta1: (0.1, 0.4),
        theta2: (3e-4, 9e-4),
    };

    /// Degenerate box pinned at one parameter point.
    pub fn point(theta1: f64, theta2: f64) -> Self {
        Self {
            theta1: (theta1, theta1),
            theta2: (theta2, theta2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("theta1", self.theta1), ("theta2", self.theta2)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::domain(format!("prior range for {name} is invalid: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, theta1: f64, theta2: f64) -> bool {
        (self.theta1.0..=self.theta1.1).contains(&theta1) && (self.theta2.0..=self.theta2.1).contains(&theta2)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let draw = |(lo, hi): (f64, f64), rng: &mut R| lo + (hi - lo) * rng.random::<f64>();
        let a = draw(self.theta1, rng);
        let b = draw(self.theta2, rng);
        (a, b)
    }

    /// `k × k` grid of interior points (cell centres).
    pub fn grid(&self, k: usize) -> Vec<(f64, f64)> {
        let at = |(lo, hi): (f64, f64), j: usize| lo + (hi - lo) * (j as f64 + 0.5) / k as f64;
        (0..k)
            .flat_map(|a| (0..k).map(move |b| (a, b)))
            .map(|(a, b)| (at(self.theta1, a), at(self.theta2, b)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Onoff,
    Sir,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Onoff => "onoff",
            Problem::Sir => "sir",
        }
    }
}

impl std::str::FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "onoff" | "on/off" | "on_off" => Ok(Problem::Onoff),
            "sir" => Ok(Problem::Sir),
            other => Err(Error::config(format!("unknown problem `{other}`"))),
        }
    }
}

/// Sidecar description of how a dataset was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: String,
    pub problem: Problem,
    pub prior: PriorBox,
    pub seed: u64,
    /// Parameter points (ECDF) or records (indicator).
    pub b: usize,
    /// Experiments per parameter point; absent for indicator datasets.
    pub k: Option<usize>,
    pub scenario: Option<SirScenario>,
    pub observation: Option<SirObservation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub meta: Option<DatasetMeta>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Row-major `n × 3` feature matrix.
    pub fn features(&self) -> Vec<f64> {
        self.records.iter().flat_map(|r| r.features()).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.target).collect()
    }

    pub fn group_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.records.iter().map(|r| r.group_id).collect();
        ids.dedup();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn with_records(&self, records: Vec<Record>) -> Dataset {
        Dataset {
            records,
            meta: self.meta.clone(),
        }
    }
}
