use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, Record};
use crate::seed;
use crate::{Error, Result};

/// Train / validation / calibration fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub calibration: f64,
    /// Keep every record of a parameter point in the same part.
    pub group_aware: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.8,
            validation: 0.1,
            calibration: 0.1,
            group_aware: true,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.calibration];
        if parts.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(Error::config(format!("split fractions must be positive, got {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("split fractions must sum to 1, got {parts:?}")));
        }
        Ok(())
    }

    /// Part sizes for `n` units; validation and calibration are rounded,
    /// training takes the rest.
    fn sizes(&self, n: usize, unit: &str) -> Result<[usize; 3]> {
        let val = (n as f64 * self.validation).round() as usize;
        let cal = (n as f64 * self.calibration).round() as usize;
        let sizes = [n.saturating_sub(val + cal), val, cal];
        if sizes.contains(&0) || val + cal >= n {
            return Err(Error::config(format!(
                "split of {n} {unit} leaves an empty part (train/validation/calibration = {:?})",
                sizes
            )));
        }
        Ok(sizes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub validation: Dataset,
    pub calibration: Dataset,
}

/// Disjoint seeded partition. Record order inside each part follows the
/// original order.
pub fn split_dataset(data: &Dataset, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut rng = seed::stream(spec.seed, "split", 0);
    let mut part_of = vec![0u8; data.len()];
    if spec.group_aware {
        let mut groups = data.group_ids();
        let sizes = spec.sizes(groups.len(), "parameter points")?;
        groups.shuffle(&mut rng);
        let mut assignment = std::collections::HashMap::with_capacity(groups.len());
        for (k, g) in groups.into_iter().enumerate() {
            assignment.insert(g, part_index(k, &sizes));
        }
        for (slot, r) in part_of.iter_mut().zip(&data.records) {
            *slot = assignment[&r.group_id];
        }
    } else {
        let sizes = spec.sizes(data.len(), "records")?;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng);
        for (k, idx) in order.into_iter().enumerate() {
            part_of[idx] = part_index(k, &sizes);
        }
    }
    let mut parts: [Vec<Record>; 3] = Default::default();
    for (r, &p) in data.records.iter().zip(&part_of) {
        parts[p as usize].push(*r);
    }
    let [train, validation, calibration] = parts;
    Ok(Split {
        train: data.with_records(train),
        validation: data.with_records(validation),
        calibration: data.with_records(calibration),
    })
}

fn part_index(k: usize, sizes: &[usize; 3]) -> u8 {
    if k < sizes[0] {
        0
    } else if k < sizes[0] + sizes[1] {
        1
    } else {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(groups: u64, per_group: u64) -> Dataset {
        let records = (0..groups * per_group)
            .map(|i| Record {
                theta1: (i / per_group) as f64,
                theta2: 0.0,
                lambda: i as f64,
                target: 0.5,
                group_id: i / per_group,
            })
            .collect();
        Dataset { records, meta: None }
    }

    fn sorted_lambdas(parts: &[&Dataset]) -> Vec<f64> {
        let mut v: Vec<f64> = parts.iter().flat_map(|d| d.records.iter().map(|r| r.lambda)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn record_split_sizes() {
        let d = toy(1000, 1);
        let spec = SplitSpec { group_aware: false, ..SplitSpec::default() };
        let s = split_dataset(&d, &spec).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.calibration.len()), (800, 100, 100));
        assert_eq!(sorted_lambdas(&[&s.train, &s.validation, &s.calibration]), sorted_lambdas(&[&d]));
    }

    #[test]
    fn group_split_keeps_groups_whole() {
        let d = toy(100, 10);
        let s = split_dataset(&d, &SplitSpec::default()).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.calibration.len()), (800, 100, 100));
        let ids = |x: &Dataset| x.group_ids();
        let (a, b, c) = (ids(&s.train), ids(&s.validation), ids(&s.calibration));
        assert!(a.iter().all(|g| !b.contains(g) && !c.contains(g)));
        assert!(b.iter().all(|g| !c.contains(g)));
        assert_eq!(sorted_lambdas(&[&s.train, &s.validation, &s.calibration]), sorted_lambdas(&[&d]));
    }

    #[test]
    fn split_is_seeded() {
        let d = toy(50, 4);
        let a = split_dataset(&d, &SplitSpec::default()).unwrap();
        let b = split_dataset(&d, &SplitSpec::default()).unwrap();
        let c = split_dataset(&d, &SplitSpec { seed: 1, ..SplitSpec::default() }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.validation, c.validation);
    }

    #[test]
    fn tiny_parts_are_configuration_errors() {
        let d = toy(3, 3);
        assert!(matches!(split_dataset(&d, &SplitSpec::default()), Err(Error::Config(_))));
        let bad = SplitSpec { train: 0.5, ..SplitSpec::default() };
        assert!(matches!(split_dataset(&d, &bad), Err(Error::Config(_))));
    }
}
