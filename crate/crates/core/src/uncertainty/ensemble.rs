use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curve::{cdf_grid, pdf_grid};
use crate::nn::{Network, NetworkSpec};
use crate::seed;
use crate::statistics::order_rank;
use crate::training::{train_regressor, Samples, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Provenance {
    /// `k` members trained on resamples; `shared_init` reuses one
    /// initialization seed for every member.
    Bootstrap { k: usize, shared_init: bool },
    /// `n` Gaussian perturbations of one trained network with std `sigma`.
    WeightFluctuation { sigma: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub members: Vec<Network>,
    pub provenance: Provenance,
    pub seed: u64,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Indices of a with-replacement resample of size `n`.
pub fn bootstrap_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Member `i` trains on its own resample of the training rows, drawn from
/// stream `i`, under the same protocol as a single run.
pub fn bootstrap_ensemble(
    train: &Samples,
    val: &Samples,
    spec: &NetworkSpec,
    config: &TrainConfig,
    k: usize,
    master_seed: u64,
    shared_init: bool,
) -> Result<Ensemble> {
    if k == 0 {
        return Err(Error::config("bootstrap ensemble needs at least one member"));
    }
    if train.is_empty() {
        return Err(Error::config("empty training set"));
    }
    let members = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream(master_seed, "bootstrap", i as u64);
            let idx = bootstrap_indices(train.len(), &mut rng);
            let resample = Samples {
                x: idx.iter().flat_map(|&j| train.row(j).iter().copied()).collect(),
                y: idx.iter().map(|&j| train.y[j]).collect(),
                width: train.width,
            };
            let mut member_spec = spec.clone();
            if !shared_init {
                member_spec.init.seed = seed::child_seed(master_seed, "bootstrap-init", i as u64);
            }
            let cfg = TrainConfig {
                seed: seed::child_seed(master_seed, "bootstrap-batches", i as u64),
                ..config.clone()
            };
            train_regressor(&resample, val, &member_spec, &cfg)
                .map(|o| o.network)
                .map_err(|e| Error::Ensemble {
                    member: i,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        members,
        provenance: Provenance::Bootstrap { k, shared_init },
        seed: master_seed,
    })
}

/// `n` copies of `net` with every weight and bias shifted by independent
/// `N(0, σ²)` noise; PReLU slopes are left as trained.
pub fn weight_fluctuate(net: &Network, sigma: f64, n: usize, master_seed: u64) -> Result<Ensemble> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::config("weight fluctuation needs at least one clone"));
    }
    let members = (0..n)
        .map(|i| {
            let mut rng = seed::stream(master_seed, "fluctuate", i as u64);
            let mut clone = net.clone();
            if sigma > 0.0 {
                clone.for_each_weight_and_bias_mut(|w| {
                    let z: f64 = rng.sample(StandardNormal);
                    *w += sigma * z;
                });
            }
            clone
        })
        .collect();
    Ok(Ensemble {
        members,
        provenance: Provenance::WeightFluctuation { sigma, n },
        seed: master_seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Response {
    Cdf,
    Pdf,
}

/// Pointwise member mean and central quantile band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub lambda: Vec<f64>,
    pub lo: Vec<f64>,
    pub mean: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Envelope over member responses on `grid`: `lo`/`hi` are the
/// `(1−level)/2` and `(1+level)/2` empirical quantiles per point.
pub fn ensemble_envelope(
    ensemble: &Ensemble,
    theta: (f64, f64),
    grid: &[f64],
    level: f64,
    response: Response,
) -> Result<Envelope> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("level must lie in (0, 1), got {level}")));
    }
    if ensemble.is_empty() {
        return Err(Error::domain("empty ensemble"));
    }
    let curves = ensemble
        .members
        .par_iter()
        .map(|net| match response {
            Response::Cdf => cdf_grid(net, theta, grid),
            Response::Pdf => pdf_grid(net, theta, grid),
        })
        .collect::<Result<Vec<_>>>()?;
    let m = curves.len();
    let (r_lo, r_hi) = (order_rank(m, (1.0 - level) / 2.0), order_rank(m, (1.0 + level) / 2.0));
    let mut env = Envelope {
        lambda: grid.to_vec(),
        lo: Vec::with_capacity(grid.len()),
        mean: Vec::with_capacity(grid.len()),
        hi: Vec::with_capacity(grid.len()),
    };
    let mut column = vec![0.0; m];
    for k in 0..grid.len() {
        for (c, curve) in column.iter_mut().zip(&curves) {
            *c = curve[k];
        }
        column.sort_by(f64::total_cmp);
        env.lo.push(column[r_lo - 1]);
        env.hi.push(column[r_hi - 1]);
        env.mean.push(column.iter().sum::<f64>() / m as f64);
    }
    Ok(env)
}
