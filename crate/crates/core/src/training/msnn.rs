use serde::{Deserialize, Serialize};

use super::regressor::{train_regressor, Budget, Samples, TrainConfig};
use crate::nn::{Activation, InitSpec, Network, NetworkSpec, OptimizerKind};
use crate::seed;
use crate::{Error, Result};

/// First-layer weight factor for residual stages.
pub const RESIDUAL_KAPPA: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsnnStage {
    pub spec: NetworkSpec,
    pub config: TrainConfig,
}

/// Networks `u₀…uₙ` with scales `ε₀ = 1, ε₁…εₙ`; the combined regressor is
/// `Σ εⱼ·uⱼ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MsnnStack {
    pub stages: Vec<Network>,
    pub scales: Vec<f64>,
    /// RMS of the combined residual after the last stage.
    pub final_rms: f64,
}

impl MsnnStack {
    /// `ε₁, ε₂, …` followed by the RMS left after the last stage.
    pub fn residual_rms(&self) -> Vec<f64> {
        let mut v = self.scales[1..].to_vec();
        v.push(self.final_rms);
        v
    }
}

/// Stage list following the multistage recipe: a tanh network for the raw
/// target, then residual networks with a sine first layer, tanh afterwards,
/// Glorot init with the first layer scaled by 60, identity heads throughout.
pub fn msnn_recipe(input_width: usize, depth: usize, width: usize, stages: usize, base: &TrainConfig, seed: u64) -> Vec<MsnnStage> {
    (0..stages)
        .map(|j| {
            let mut acts = vec![Activation::Tanh; depth];
            let mut init = InitSpec {
                seed: seed::child_seed(seed, "msnn-init", j as u64),
                ..InitSpec::default()
            };
            if j > 0 {
                acts[0] = Activation::Sine;
                init.kappa = RESIDUAL_KAPPA;
            }
            let mut widths = vec![input_width];
            widths.extend(std::iter::repeat_n(width, depth));
            widths.push(1);
            let spec = NetworkSpec {
                layer_widths: widths,
                hidden_activations: acts,
                output_activation: Activation::Identity,
                init,
            };
            let config = TrainConfig {
                seed: seed::child_seed(seed, "msnn-batches", j as u64),
                ..base.clone()
            };
            MsnnStage { spec, config }
        })
        .collect()
}

impl Default for MsnnStage {
    fn default() -> Self {
        msnn_recipe(
            1,
            2,
            32,
            1,
            &TrainConfig {
                optimizer: OptimizerKind::Adam,
                budget: Budget::Iterations(10_000),
                standardize: false,
                ..TrainConfig::default()
            },
            0,
        )
        .remove(0)
    }
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|e| e * e).sum::<f64>() / v.len() as f64).sqrt()
}

/// Fit the stages in sequence. Stage `j ≥ 1` regresses `eⱼ/εⱼ`, where `eⱼ` is
/// the current residual of the combined regressor and `εⱼ` its RMS over the
/// training set. Each stage checkpoints on the training loss. An exact fit
/// (`εⱼ = 0`) ends the stack early.
pub fn msnn_fit(train: &Samples, stages: &[MsnnStage]) -> Result<MsnnStack> {
    if stages.is_empty() {
        return Err(Error::config("a multistage fit needs at least one stage"));
    }
    if train.is_empty() {
        return Err(Error::config("empty training set"));
    }
    let mut nets = Vec::with_capacity(stages.len());
    let mut scales = Vec::with_capacity(stages.len());
    let mut combined = vec![0.0; train.len()];
    let mut residual = train.y.clone();
    for (j, stage) in stages.iter().enumerate() {
        let eps = if j == 0 { 1.0 } else { rms(&residual) };
        if eps == 0.0 {
            log::info!("residual vanished before stage {j}; stack truncated");
            break;
        }
        let target: Vec<f64> = residual.iter().map(|e| e / eps).collect();
        let data = Samples { x: train.x.clone(), y: target, width: train.width };
        let out = train_regressor(&data, &data, &stage.spec, &stage.config)?;
        let pred = out.network.predict(&train.x)?;
        for ((c, r), (p, y)) in combined.iter_mut().zip(residual.iter_mut()).zip(pred.iter().zip(&train.y)) {
            *c += eps * p;
            *r = y - *c;
        }
        log::info!("stage {j}: scale {eps:.3e}, residual rms {:.3e}", rms(&residual));
        nets.push(out.network);
        scales.push(eps);
    }
    Ok(MsnnStack { stages: nets, scales, final_rms: rms(&residual) })
}

/// `Σ εⱼ·uⱼ(x)`.
pub fn msnn_predict(stack: &MsnnStack, x: &[f64]) -> Result<f64> {
    stack
        .stages
        .iter()
        .zip(&stack.scales)
        .map(|(net, eps)| Ok(eps * net.forward(x)?))
        .sum()
}
