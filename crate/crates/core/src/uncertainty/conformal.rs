use serde::{Deserialize, Serialize};

use super::curve::{cdf_grid, pdf_grid};
use crate::datasets::ecdf_targets;
use crate::nn::Network;
use crate::statistics::{histogram_density, Bins};
use crate::training::Samples;
use crate::{Error, Result};

/// Split-conformal calibration from absolute residual scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalCalibration {
    pub scores: Vec<f64>,
    pub alpha: f64,
    pub q_hat: f64,
    /// The rank `⌈(n+1)(1−α)⌉` exceeded `n`: the exact band is unbounded and
    /// `q_hat` holds the largest score instead.
    pub unbounded: bool,
}

impl ConformalCalibration {
    /// `q̂` is the `⌈(n+1)(1−α)⌉`-th smallest score.
    pub fn from_scores(scores: &[f64], alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if scores.is_empty() {
            return Err(Error::domain("empty calibration set"));
        }
        if scores.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::domain("conformity scores must be finite and >= 0"));
        }
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let rank = ((n + 1) as f64 * (1.0 - alpha) - 1e-9).ceil() as usize;
        let unbounded = rank > n;
        if unbounded {
            log::warn!(
                "conformal rank {rank} exceeds calibration size {n} at alpha={alpha}: band is unbounded, using the largest score"
            );
        }
        let q_hat = sorted[rank.clamp(1, n) - 1];
        Ok(Self {
            scores: sorted,
            alpha,
            q_hat,
            unbounded,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// `[prediction − q̂, prediction + q̂]`, intersected with `clamp` when given.
pub fn conformal_band(prediction: f64, calib: &ConformalCalibration, clamp: Option<(f64, f64)>) -> (f64, f64) {
    let (lo, hi) = (prediction - calib.q_hat, prediction + calib.q_hat);
    match clamp {
        Some((a, b)) => (lo.max(a).min(b), hi.min(b).max(a)),
        None => (lo, hi),
    }
}

fn abs_scores(pred: &[f64], target: &[f64]) -> Vec<f64> {
    pred.iter().zip(target).map(|(p, y)| (p - y).abs()).collect()
}

/// Pooled calibration on held-out samples: scores `|f̂(x) − y|`.
pub fn conformal_calibrate(net: &Network, calibration: &Samples, alpha: f64) -> Result<ConformalCalibration> {
    if calibration.is_empty() {
        return Err(Error::domain("empty calibration set"));
    }
    let pred = net.predict(&calibration.x)?;
    ConformalCalibration::from_scores(&abs_scores(&pred, &calibration.y), alpha)
}

/// Calibration at one parameter point for CDF outputs: the ECDF of fresh
/// statistics simulated at `theta` is the response.
pub fn calibrate_cdf_at_point(net: &Network, theta: (f64, f64), lambdas: &[f64], alpha: f64) -> Result<ConformalCalibration> {
    let targets = ecdf_targets(lambdas)?;
    let pred = cdf_grid(net, theta, lambdas)?;
    ConformalCalibration::from_scores(&abs_scores(&pred, &targets), alpha)
}

/// Calibration at one parameter point for pdf outputs: the histogram density
/// of fresh statistics, read at the bin centres, is the response.
pub fn calibrate_pdf_at_point(
    net: &Network,
    theta: (f64, f64),
    lambdas: &[f64],
    bins: &Bins,
    alpha: f64,
) -> Result<ConformalCalibration> {
    let hist = histogram_density(lambdas, bins)?;
    let centers = hist.centers();
    let pred = pdf_grid(net, theta, &centers)?;
    ConformalCalibration::from_scores(&abs_scores(&pred, &hist.densities), alpha)
}

/// Fraction of fresh targets inside their (unclamped) bands.
pub fn coverage_check(net: &Network, calib: &ConformalCalibration, fresh: &Samples) -> Result<f64> {
    if fresh.is_empty() {
        return Err(Error::domain("empty fresh set"));
    }
    let pred = net.predict(&fresh.x)?;
    let inside = pred
        .iter()
        .zip(&fresh.y)
        .filter(|(p, y)| {
            let (lo, hi) = conformal_band(**p, calib, None);
            lo <= **y && **y <= hi
        })
        .count();
    Ok(inside as f64 / fresh.len() as f64)
}
