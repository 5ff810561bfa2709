use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::network::{Gradients, Network};
use crate::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-8;
pub const RMSPROP_DECAY: f64 = 0.99;
/// Momentum-schedule constant of NAdam (μ_t = β₁(1 − ½·0.96^(t·ψ))).
pub const NADAM_MOMENTUM_DECAY: f64 = 0.004;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
    Nadam,
    RmsProp,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [
        OptimizerKind::Adam,
        OptimizerKind::Nadam,
        OptimizerKind::RmsProp,
        OptimizerKind::Sgd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Nadam => "nadam",
            OptimizerKind::RmsProp => "rmsprop",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            "nadam" => Ok(OptimizerKind::Nadam),
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            other => Err(Error::config(format!("unknown optimizer `{other}`"))),
        }
    }
}

/// Optimizer with its moment accumulators.
///
/// Accumulators are allocated lazily on the first step to mirror the network.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    step: u64,
    first: Option<Gradients>,
    second: Option<Gradients>,
    mu_product: f64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        Ok(Self {
            kind,
            lr,
            step: 0,
            first: None,
            second: None,
            mu_product: 1.0,
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Apply one update. A gradient containing non-finite values is rejected
    /// before any parameter or accumulator changes.
    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        if !grads.matches(net) {
            return Err(Error::Shape {
                what: "gradient set",
                expected: net.num_params(),
                got: grads.weights.iter().chain(&grads.biases).map(Vec::len).sum(),
            });
        }
        if let Some(layer) = grads.first_non_finite_layer() {
            return Err(Error::Numeric {
                layer,
                context: "optimizer gradient",
            });
        }
        self.step += 1;
        let t = self.step as f64;
        let lr = self.lr;

        match self.kind {
            OptimizerKind::Sgd => visit(net, grads, None, None, |p, g, _, _| *p -= lr * g),
            OptimizerKind::RmsProp => {
                let v = self.second.get_or_insert_with(|| Gradients::zeros_like(net));
                visit(net, grads, None, Some(v), |p, g, _, v| {
                    let v = v.unwrap();
                    *v = RMSPROP_DECAY * *v + (1.0 - RMSPROP_DECAY) * g * g;
                    *p -= lr * g / (v.sqrt() + EPS);
                });
            }
            OptimizerKind::Adam => {
                let bc1 = 1.0 - BETA1.powf(t);
                let bc2 = 1.0 - BETA2.powf(t);
                let m = self.first.get_or_insert_with(|| Gradients::zeros_like(net));
                let v = self.second.get_or_insert_with(|| Gradients::zeros_like(net));
                visit(net, grads, Some(m), Some(v), |p, g, m, v| {
                    let (m, v) = (m.unwrap(), v.unwrap());
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + EPS);
                });
            }
            OptimizerKind::Nadam => {
                let mu = BETA1 * (1.0 - 0.5 * 0.96f64.powf(t * NADAM_MOMENTUM_DECAY));
                let mu_next = BETA1 * (1.0 - 0.5 * 0.96f64.powf((t + 1.0) * NADAM_MOMENTUM_DECAY));
                self.mu_product *= mu;
                let mu_prod = self.mu_product;
                let bc2 = 1.0 - BETA2.powf(t);
                let grad_coef = lr * (1.0 - mu) / (1.0 - mu_prod);
                let mom_coef = lr * mu_next / (1.0 - mu_prod * mu_next);
                let m = self.first.get_or_insert_with(|| Gradients::zeros_like(net));
                let v = self.second.get_or_insert_with(|| Gradients::zeros_like(net));
                visit(net, grads, Some(m), Some(v), |p, g, m, v| {
                    let (m, v) = (m.unwrap(), v.unwrap());
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    let denom = (*v / bc2).sqrt() + EPS;
                    *p -= grad_coef * g / denom + mom_coef * *m / denom;
                });
            }
        }
        Ok(())
    }
}

/// Walk every learnable parameter with its gradient and optional accumulators.
fn visit(
    net: &mut Network,
    grads: &Gradients,
    mut first: Option<&mut Gradients>,
    mut second: Option<&mut Gradients>,
    mut f: impl FnMut(&mut f64, f64, Option<&mut f64>, Option<&mut f64>),
) {
    for (l, layer) in net.layers_mut().iter_mut().enumerate() {
        for (k, p) in layer.weights.iter_mut().enumerate() {
            let m = first.as_deref_mut().map(|a| &mut a.weights[l][k]);
            let v = second.as_deref_mut().map(|a| &mut a.weights[l][k]);
            f(p, grads.weights[l][k], m, v);
        }
        for (k, p) in layer.bias.iter_mut().enumerate() {
            let m = first.as_deref_mut().map(|a| &mut a.biases[l][k]);
            let v = second.as_deref_mut().map(|a| &mut a.biases[l][k]);
            f(p, grads.biases[l][k], m, v);
        }
        if let Some(p) = layer.slope.as_mut() {
            let m = first.as_deref_mut().map(|a| &mut a.slopes[l]);
            let v = second.as_deref_mut().map(|a| &mut a.slopes[l]);
            f(p, grads.slopes[l], m, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, NetworkSpec};

    fn scalar_net(w: f64) -> Network {
        let spec = NetworkSpec::new(vec![1, 1, 1], vec![Activation::Identity], Activation::Identity);
        let mut net = Network::init(&spec).unwrap();
        net.layers_mut()[0].weights[0] = w;
        net.layers_mut()[1].weights[0] = 1.0;
        net
    }

    fn grad_on_first_weight(net: &Network, g: f64) -> Gradients {
        let mut grads = Gradients::zeros_like(net);
        grads.weights[0][0] = g;
        grads
    }

    #[test]
    fn sgd_step() {
        let mut net = scalar_net(1.0);
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.1).unwrap();
        let g = grad_on_first_weight(&net, 2.0);
        opt.step(&mut net, &g).unwrap();
        assert!((net.layers()[0].weights[0] - 0.8).abs() < 1e-15);
        assert_eq!(opt.steps(), 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        for kind in OptimizerKind::ALL {
            let mut net = scalar_net(1.0);
            let before = net.clone();
            let mut opt = Optimizer::new(kind, 0.1).unwrap();
            opt.step(&mut net, &Gradients::zeros_like(&before)).unwrap();
            assert_eq!(net, before, "{kind}");
        }
    }

    #[test]
    fn adam_first_step_has_magnitude_lr() {
        // m̂ = g, v̂ = g², so the step is lr·g/(|g| + ε).
        for g in [3.0, -0.02] {
            let mut net = scalar_net(1.0);
            let mut opt = Optimizer::new(OptimizerKind::Adam, 1e-3).unwrap();
            let grads = grad_on_first_weight(&net, g);
        opt.step(&mut net, &grads).unwrap();
            let delta = net.layers()[0].weights[0] - 1.0;
            let expected = -1e-3 * g / (g.abs() + EPS);
            assert!((delta - expected).abs() < 1e-15, "{delta} vs {expected}");
            assert!(delta.signum() == -g.signum());
        }
    }

    #[test]
    fn nadam_first_step_matches_hand_evaluation() {
        let g: f64 = 0.5;
        let lr = 1e-2;
        let mu1 = BETA1 * (1.0 - 0.5 * 0.96f64.powf(0.004));
        let mu2 = BETA1 * (1.0 - 0.5 * 0.96f64.powf(0.008));
        let m = (1.0 - BETA1) * g;
        let denom = ((1.0 - BETA2) * g * g / (1.0 - BETA2)).sqrt() + EPS;
        let expected = -(lr * (1.0 - mu1) / (1.0 - mu1) * g / denom
            + lr * mu2 / (1.0 - mu1 * mu2) * m / denom);
        let mut net = scalar_net(0.0);
        let mut opt = Optimizer::new(OptimizerKind::Nadam, lr).unwrap();
        let grads = grad_on_first_weight(&net, g);
        opt.step(&mut net, &grads).unwrap();
        assert!((net.layers()[0].weights[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn rmsprop_first_step() {
        let g: f64 = 2.0;
        let mut net = scalar_net(0.0);
        let mut opt = Optimizer::new(OptimizerKind::RmsProp, 1e-3).unwrap();
        let grads = grad_on_first_weight(&net, g);
        opt.step(&mut net, &grads).unwrap();
        let expected = -1e-3 * g / ((0.01 * g * g).sqrt() + EPS);
        assert!((net.layers()[0].weights[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut net = scalar_net(1.0);
        let before = net.clone();
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.1).unwrap();
        let mut g = Gradients::zeros_like(&net);
        g.biases[1][0] = f64::NAN;
        assert!(matches!(opt.step(&mut net, &g), Err(Error::Numeric { layer: 1, .. })));
        assert_eq!(net, before);
        assert_eq!(opt.steps(), 0);
    }

    #[test]
    fn rejects_bad_learning_rate() {
        assert!(Optimizer::new(OptimizerKind::Sgd, 0.0).is_err());
        assert!(Optimizer::new(OptimizerKind::Sgd, f64::NAN).is_err());
    }
}
