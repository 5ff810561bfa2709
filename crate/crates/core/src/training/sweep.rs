use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regressor::{train_regressor, Budget, Samples, TrainConfig, TrainOutcome};
use crate::nn::{Activation, Loss, NetworkSpec, OptimizerKind};
use crate::seed::{self, Rng as StreamRng};
use crate::{Error, Result};

/// Inclusive ranges and choice sets for the random search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpace {
    pub layers: (usize, usize),
    pub width: (usize, usize),
    pub optimizers: Vec<OptimizerKind>,
    /// Sampled log-uniformly.
    pub learning_rate: (f64, f64),
    pub batch_size: (usize, usize),
    pub activations: Vec<Activation>,
}

impl Default for SweepSpace {
    fn default() -> Self {
        Self {
            layers: (1, 6),
            width: (1, 64),
            optimizers: vec![
                OptimizerKind::Adam,
                OptimizerKind::Nadam,
                OptimizerKind::RmsProp,
                OptimizerKind::Sgd,
            ],
            learning_rate: (1e-6, 1e-2),
            batch_size: (50, 30_000),
            activations: vec![
                Activation::Relu,
                Activation::LeakyRelu,
                Activation::Selu,
                Activation::Prelu,
            ],
        }
    }
}

impl SweepSpace {
    pub fn validate(&self) -> Result<()> {
        let (l, w, b, lr) = (self.layers, self.width, self.batch_size, self.learning_rate);
        if l.0 == 0 || l.0 > l.1 || w.0 == 0 || w.0 > w.1 || b.0 == 0 || b.0 > b.1 {
            return Err(Error::config("sweep ranges must be nonempty with positive lower bounds"));
        }
        if !(lr.0 > 0.0 && lr.0 <= lr.1 && lr.1.is_finite()) {
            return Err(Error::config("learning-rate range must be positive and ordered"));
        }
        if self.optimizers.is_empty() || self.activations.is_empty() {
            return Err(Error::config("optimizer and activation sets must be nonempty"));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut StreamRng) -> TrialConfig {
        let (lo, hi) = (self.learning_rate.0.ln(), self.learning_rate.1.ln());
        TrialConfig {
            layers: rng.random_range(self.layers.0..=self.layers.1),
            width: rng.random_range(self.width.0..=self.width.1),
            optimizer: self.optimizers[rng.random_range(0..self.optimizers.len())],
            learning_rate: (lo + (hi - lo) * rng.random::<f64>()).exp(),
            batch_size: rng.random_range(self.batch_size.0..=self.batch_size.1),
            activation: self.activations[rng.random_range(0..self.activations.len())],
        }
    }

    pub fn contains(&self, c: &TrialConfig) -> bool {
        (self.layers.0..=self.layers.1).contains(&c.layers)
            && (self.width.0..=self.width.1).contains(&c.width)
            && self.optimizers.contains(&c.optimizer)
            && (self.learning_rate.0..=self.learning_rate.1).contains(&c.learning_rate)
            && (self.batch_size.0..=self.batch_size.1).contains(&c.batch_size)
            && self.activations.contains(&c.activation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub layers: usize,
    pub width: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub trials: usize,
    pub budget: Budget,
    pub loss: Loss,
    pub output_activation: Activation,
    pub validation_every: u64,
    pub standardize: bool,
    pub seed: u64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            trials: 10,
            budget: Budget::Epochs(5),
            loss: Loss::Mse,
            output_activation: Activation::Sigmoid,
            validation_every: 200,
            standardize: true,
            seed: 0,
        }
    }
}

impl SweepSettings {
    /// Network and training configuration of one trial.
    pub fn realize(&self, trial: usize, c: &TrialConfig, input_width: usize) -> (NetworkSpec, TrainConfig) {
        let spec = NetworkSpec::uniform(input_width, c.layers, c.width, c.activation, self.output_activation)
            .with_seed(seed::child_seed(self.seed, "sweep-init", trial as u64));
        let cfg = TrainConfig {
            loss: self.loss,
            optimizer: c.optimizer,
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            budget: self.budget,
            validation_every: self.validation_every,
            seed: seed::child_seed(self.seed, "sweep-batches", trial as u64),
            standardize: self.standardize,
        };
        (spec, cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub config: TrialConfig,
    /// Best validation loss reached within the budget.
    pub val_loss: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub best: TrialResult,
    pub best_spec: NetworkSpec,
    pub best_config: TrainConfig,
    pub best_outcome: TrainOutcome,
    /// Every trial, ordered by index.
    pub trials: Vec<TrialResult>,
}

impl SweepOutcome {
    /// CSV with header `trial,layers,width,optimizer,lr,batch,activation,val_loss`;
    /// failed trials have an empty loss.
    pub fn write_trial_log<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["trial", "layers", "width", "optimizer", "lr", "batch", "activation", "val_loss"])
            .map_err(io)?;
        for t in &self.trials {
            let c = &t.config;
            w.write_record([
                t.trial.to_string(),
                c.layers.to_string(),
                c.width.to_string(),
                c.optimizer.to_string(),
                c.learning_rate.to_string(),
                c.batch_size.to_string(),
                c.activation.to_string(),
                t.val_loss.map(|v| v.to_string()).unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_trial_log(&self, path: &Path) -> Result<()> {
        self.write_trial_log(std::fs::File::create(path)?)
    }
}

/// Uniform random search. Each trial draws its configuration from its own
/// stream, trains for the budget and is scored by its best validation loss.
pub fn random_sweep(space: &SweepSpace, settings: &SweepSettings, train: &Samples, val: &Samples) -> Result<SweepOutcome> {
    space.validate()?;
    if settings.trials == 0 {
        return Err(Error::config("a sweep needs at least one trial"));
    }
    let runs: Vec<(TrialResult, Option<TrainOutcome>)> = (0..settings.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::stream(settings.seed, "sweep-trial", t as u64);
            let config = space.sample(&mut rng);
            let (spec, cfg) = settings.realize(t, &config, train.width);
            match train_regressor(train, val, &spec, &cfg) {
                Ok(out) => {
                    log::info!("trial {t}: {config:?} -> {:.6e}", out.best_val_loss);
                    (
                        TrialResult { trial: t, config, val_loss: Some(out.best_val_loss), error: None },
                        Some(out),
                    )
                }
                Err(e) => {
                    log::warn!("trial {t} failed: {e}");
                    (TrialResult { trial: t, config, val_loss: None, error: Some(e.to_string()) }, None)
                }
            }
        })
        .collect();

    let best_index = runs
        .iter()
        .enumerate()
        .filter_map(|(i, (r, _))| r.val_loss.map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    let Some(best_index) = best_index else {
        return Err(Error::Sweep(
            runs.into_iter()
                .map(|(r, _)| format!("trial {}: {}", r.trial, r.error.unwrap_or_default()))
                .collect(),
        ));
    };
    let trials: Vec<TrialResult> = runs.iter().map(|(r, _)| r.clone()).collect();
    let (best, outcome) = runs.into_iter().nth(best_index).expect("index in range");
    let (best_spec, best_config) = settings.realize(best.trial, &best.config, train.width);
    Ok(SweepOutcome {
        best,
        best_spec,
        best_config,
        best_outcome: outcome.expect("successful trial has an outcome"),
        trials,
    })
}
