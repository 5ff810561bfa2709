//! Empirical distribution utilities.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Slack on `n·p` before taking the ceiling, so that products like
/// `0.84 × 200` that land a hair above an integer keep their intended rank.
const RANK_SLACK: f64 = 1e-9;

/// 1-based rank `⌈n·p⌉` clamped to `[1, n]`.
pub(crate) fn order_rank(n: usize, p: f64) -> usize {
    ((n as f64 * p - RANK_SLACK).ceil() as usize).clamp(1, n)
}

fn check_finite(samples: &[f64], what: &str) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::domain(format!("{what}: no samples")));
    }
    if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("{what}: non-finite value at index {k}")));
    }
    Ok(())
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Step-function empirical CDF over a sorted copy of the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfTable {
    sorted_samples: Vec<f64>,
}

impl EcdfTable {
    pub fn new(samples: &[f64]) -> Result<Self> {
        check_finite(samples, "ECDF")?;
        Ok(Self {
            sorted_samples: sorted(samples),
        })
    }

    pub fn len(&self) -> usize {
        self.sorted_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_samples.is_empty()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted_samples
    }

    /// Fraction of samples `≤ lambda` (ties counted with multiplicity).
    pub fn eval(&self, lambda: f64) -> f64 {
        self.sorted_samples.partition_point(|&x| x <= lambda) as f64 / self.len() as f64
    }

    /// `⌈n·p⌉`-th order statistic.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(self.sorted_samples[order_rank(self.len(), p) - 1])
    }
}

pub fn ecdf_eval(table: &EcdfTable, lambda: f64) -> f64 {
    table.eval(lambda)
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("probability must lie in (0, 1], got {p}")))
    }
}

/// Lower order statistic `x_(⌈n·p⌉)`, no interpolation.
pub fn empirical_quantile(samples: &[f64], p: f64) -> Result<f64> {
    check_probability(p)?;
    check_finite(samples, "quantile")?;
    let mut v = samples.to_vec();
    let k = order_rank(v.len(), p) - 1;
    let (_, kth, _) = v.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*kth)
}

/// `k` probabilities `j/(k+1)`, evenly spaced inside (0, 1).
pub fn even_probabilities(k: usize) -> Vec<f64> {
    (1..=k).map(|j| j as f64 / (k + 1) as f64).collect()
}

/// Quantile residuals `ΔC = q − p`.
///
/// `model_cdf_values` are the model's CDF values at the simulated statistics
/// of one parameter point; `q` holds their empirical quantiles at `probs`.
/// A calibrated model gives `ΔC ≈ 0`; a model reading high by `c` gives `+c`.
pub fn quantile_residuals(model_cdf_values: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    if probs.is_empty() {
        return Err(Error::domain("quantile residuals: no probabilities"));
    }
    let table = EcdfTable::new(model_cdf_values)?;
    probs.iter().map(|&p| Ok(table.quantile(p)? - p)).collect()
}

/// Cdf residuals `Δr = F̂ − F`, elementwise.
pub fn cdf_residuals(predicted: &[f64], empirical: &[f64]) -> Result<Vec<f64>> {
    if predicted.len() != empirical.len() {
        return Err(Error::Shape {
            what: "empirical CDF values",
            expected: predicted.len(),
            got: empirical.len(),
        });
    }
    Ok(predicted.iter().zip(empirical).map(|(f, e)| f - e).collect())
}

/// How to place histogram bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Bins {
    /// `⌈log₂ n⌉ + 1` equal bins over the sample range.
    Sturges,
    /// Equal bins over the sample range.
    Count(usize),
    /// Explicit ascending edges; samples outside are ignored.
    Edges(Vec<f64>),
}

pub fn sturges_bins(n: usize) -> usize {
    (n.max(1) as f64).log2().ceil() as usize + 1
}

/// Piecewise-constant density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramDensity {
    pub bin_edges: Vec<f64>,
    pub densities: Vec<f64>,
}

impl HistogramDensity {
    pub fn num_bins(&self) -> usize {
        self.densities.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Total probability mass `Σ density·width`.
    pub fn mass(&self) -> f64 {
        self.densities.iter().zip(self.widths()).map(|(d, w)| d * w).sum()
    }

    /// Height of the bin containing `x`, or 0 outside the edges.
    pub fn density_at(&self, x: f64) -> f64 {
        bin_index(&self.bin_edges, x).map_or(0.0, |b| self.densities[b])
    }

    /// CSV with header `bin_lo,bin_hi,density`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["bin_lo", "bin_hi", "density"]).map_err(io)?;
        for (k, d) in self.densities.iter().enumerate() {
            w.write_record([
                self.bin_edges[k].to_string(),
                self.bin_edges[k + 1].to_string(),
                d.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Bin of `x` for half-open bins, the last bin closed on the right.
fn bin_index(edges: &[f64], x: f64) -> Option<usize> {
    let last = *edges.last()?;
    if x < edges[0] || x > last || x.is_nan() {
        return None;
    }
    let b = edges.partition_point(|&e| e <= x);
    Some(b.saturating_sub(1).min(edges.len() - 2))
}

/// Histogram normalized so that `Σ density·width = 1` over the samples that
/// fall inside the edges.
pub fn histogram_density(samples: &[f64], bins: &Bins) -> Result<HistogramDensity> {
    check_finite(samples, "histogram")?;
    let edges = match bins {
        Bins::Edges(edges) => {
            if edges.len() < 2 {
                return Err(Error::domain("histogram needs at least two edges"));
            }
            if let Some(w) = edges.windows(2).find(|w| !(w[1] > w[0])) {
                return Err(Error::domain(format!(
                    "zero-width or descending bin [{}, {}]",
                    w[0], w[1]
                )));
            }
            edges.clone()
        }
        Bins::Count(0) => return Err(Error::domain("histogram needs at least one bin")),
        Bins::Count(k) => range_edges(samples, *k),
        Bins::Sturges => range_edges(samples, sturges_bins(samples.len())),
    };
    let mut counts = vec![0usize; edges.len() - 1];
    let mut inside = 0usize;
    for &x in samples {
        if let Some(b) = bin_index(&edges, x) {
            counts[b] += 1;
            inside += 1;
        }
    }
    if inside == 0 {
        return Err(Error::domain("no samples fall inside the histogram edges"));
    }
    let densities = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| c as f64 / (inside as f64 * (w[1] - w[0])))
        .collect();
    Ok(HistogramDensity {
        bin_edges: edges,
        densities,
    })
}

fn range_edges(samples: &[f64], k: usize) -> Vec<f64> {
    let (mut lo, mut hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if hi <= lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let step = (hi - lo) / k as f64;
    let mut edges: Vec<f64> = (0..k).map(|j| lo + j as f64 * step).collect();
    edges.push(hi);
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn ecdf_examples() {
        let t = EcdfTable::new(&[3.0, 1.0, 2.0]).unwrap();
        assert!((t.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.eval(0.5), 0.0);
        assert_eq!(t.eval(3.0), 1.0);
        assert_eq!(t.eval(10.0), 1.0);
        assert!(EcdfTable::new(&[]).is_err());
    }

    #[test]
    fn ecdf_counts_ties() {
        let t = EcdfTable::new(&[1.0, 1.0, 1.0, 4.0]).unwrap();
        assert_eq!(t.eval(1.0), 0.75);
        assert_eq!(t.eval(0.999), 0.0);
    }

    #[test]
    fn quantile_examples() {
        let s = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(empirical_quantile(&s, 0.5).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&s, 1.0).unwrap(), 4.0);
        assert_eq!(empirical_quantile(&s, 0.25).unwrap(), 1.0);
        assert!(empirical_quantile(&s, 0.0).is_err());
        assert!(empirical_quantile(&s, 1.5).is_err());
    }

    #[test]
    fn rank_tolerates_rounding_above_integers() {
        // 0.84·200 evaluates to 168.00000000000003.
        assert_eq!(order_rank(200, 0.84), 168);
        assert_eq!(order_rank(200, 0.845), 169);
        assert_eq!(order_rank(3, 1e-12), 1);
    }

    #[test]
    fn quantile_residuals_vanish_for_calibrated_model() {
        // The true CDF evaluated at its own samples is uniform on (0,1).
        let mut rng = seed::rng(8);
        let n = 20_000;
        let values: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let probs = even_probabilities(19);
        let dc = quantile_residuals(&values, &probs).unwrap();
        assert_eq!(dc.len(), probs.len());
        assert!(dc.iter().all(|d| d.abs() < 0.02), "{dc:?}");
    }

    #[test]
    fn quantile_residuals_of_exact_grid() {
        // F̂ values exactly at j/n: q equals p up to one grid step.
        let n = 1000;
        let values: Vec<f64> = (1..=n).map(|j| j as f64 / n as f64).collect();
        for d in quantile_residuals(&values, &even_probabilities(9)).unwrap() {
            assert!(d.abs() <= 1.0 / n as f64 + 1e-12);
        }
    }

    #[test]
    fn shifted_model_gives_shifted_residuals() {
        let n = 10_000;
        let c = 0.05;
        let values: Vec<f64> = (1..=n).map(|j| (j as f64 / n as f64 + c).min(1.0)).collect();
        let probs = even_probabilities(9);
        for (p, d) in probs.iter().zip(quantile_residuals(&values, &probs).unwrap()) {
            if *p < 1.0 - c {
                assert!((d - c).abs() <= 1.0 / n as f64 + 1e-12, "p={p}: {d}");
            }
        }
    }

    #[test]
    fn cdf_residual_examples() {
        assert_eq!(cdf_residuals(&[0.2, 0.7], &[0.2, 0.7]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(cdf_residuals(&[1.0], &[0.0]).unwrap(), vec![1.0]);
        assert!(matches!(cdf_residuals(&[1.0], &[]), Err(Error::Shape { .. })));
        let mut rng = seed::rng(2);
        let a: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        assert!(cdf_residuals(&a, &b).unwrap().iter().all(|d| d.abs() <= 1.0));
    }

    #[test]
    fn uniform_histogram_is_flat() {
        let mut rng = seed::rng(12);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.random()).collect();
        let h = histogram_density(&xs, &Bins::Count(10)).unwrap();
        assert_eq!(h.num_bins(), 10);
        assert!(h.densities.iter().all(|d| (d - 1.0).abs() < 0.05), "{:?}", h.densities);
        assert!((h.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_bin_has_zero_height() {
        let edges = vec![0.0, 1.0, 2.0, 3.0];
        let h = histogram_density(&[0.5, 2.5, 3.0], &Bins::Edges(edges)).unwrap();
        assert_eq!(h.densities[1], 0.0);
        assert!((h.densities[2] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(h.density_at(2.9), h.densities[2]);
        assert_eq!(h.density_at(5.0), 0.0);
    }

    #[test]
    fn zero_width_bin_is_rejected() {
        let edges = vec![0.0, 1.0, 1.0, 2.0];
        assert!(histogram_density(&[0.5], &Bins::Edges(edges)).is_err());
        assert!(histogram_density(&[0.5], &Bins::Count(0)).is_err());
    }

    #[test]
    fn constant_samples_get_a_unit_bin_range() {
        let h = histogram_density(&[2.0; 5], &Bins::Sturges).unwrap();
        assert!((h.mass() - 1.0).abs() < 1e-12);
        assert_eq!(h.bin_edges[0], 1.5);
    }

    #[test]
    fn histogram_csv_header() {
        let h = histogram_density(&[0.0, 1.0], &Bins::Count(2)).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("bin_lo,bin_hi,density"));
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn ecdf_is_monotone_and_bounded(xs in prop::collection::vec(-50.0f64..50.0, 1..60), a in -60.0f64..60.0, b in -60.0f64..60.0) {
            let t = EcdfTable::new(&xs).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(t.eval(lo) <= t.eval(hi));
            prop_assert_eq!(t.eval(-100.0), 0.0);
            prop_assert_eq!(t.eval(100.0), 1.0);
        }

        #[test]
        fn quantile_inverts_ecdf(xs in prop::collection::vec(-5i32..5, 1..50)) {
            // Integer-valued samples force heavy ties.
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let t = EcdfTable::new(&xs).unwrap();
            let n = xs.len();
            for k in 1..=n {
                let p = k as f64 / n as f64;
                let q = empirical_quantile(&xs, p).unwrap();
                prop_assert!(t.eval(q) >= p - 1e-12);
                prop_assert_eq!(q, t.quantile(p).unwrap());
            }
            prop_assert_eq!(empirical_quantile(&xs, 1.0 / n as f64).unwrap(), t.sorted_samples()[0]);
        }

        #[test]
        fn histogram_mass_is_one(xs in prop::collection::vec(-1e3f64..1e3, 1..200), k in 1usize..40) {
            let h = histogram_density(&xs, &Bins::Count(k)).unwrap();
            prop_assert!((h.mass() - 1.0).abs() < 1e-12);
            prop_assert!(h.densities.iter().all(|d| *d >= 0.0));
            let s = histogram_density(&xs, &Bins::Sturges).unwrap();
            prop_assert!((s.mass() - 1.0).abs() < 1e-12);
        }
    }
}
