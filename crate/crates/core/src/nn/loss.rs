use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_HUBER_DELTA: f64 = 0.7;

/// Per-example regression loss; batches use the mean.
///
/// MSE is the plain squared residual (no ½). Huber is ½r² inside `|r| ≤ δ`
/// and `δ(|r| − δ/2)` outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Loss {
    Mse,
    Huber { delta: f64 },
}

impl Loss {
    pub fn huber() -> Self {
        Loss::Huber {
            delta: DEFAULT_HUBER_DELTA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Loss::Huber { delta } if !(delta > 0.0 && delta.is_finite()) => Err(Error::domain(
                format!("Huber delta must be positive, got {delta}"),
            )),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn value(&self, pred: f64, target: f64) -> f64 {
        let r = pred - target;
        match *self {
            Loss::Mse => r * r,
            Loss::Huber { delta } => {
                let a = r.abs();
                if a <= delta {
                    0.5 * r * r
                } else {
                    delta * (a - 0.5 * delta)
                }
            }
        }
    }

    /// d(loss)/d(pred).
    #[inline]
    pub fn derivative(&self, pred: f64, target: f64) -> f64 {
        let r = pred - target;
        match *self {
            Loss::Mse => 2.0 * r,
            Loss::Huber { delta } => r.clamp(-delta, delta),
        }
    }

    pub fn mean(&self, preds: &[f64], targets: &[f64]) -> f64 {
        debug_assert_eq!(preds.len(), targets.len());
        let sum: f64 = preds
            .iter()
            .zip(targets)
            .map(|(&p, &t)| self.value(p, t))
            .sum();
        sum / preds.len() as f64
    }

    pub fn label(&self) -> String {
        match self {
            Loss::Mse => "MSE".to_string(),
            Loss::Huber { delta } => format!("Huber(δ={delta})"),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loss::Mse => f.write_str("mse"),
            Loss::Huber { .. } => f.write_str("huber"),
        }
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mse" => Ok(Loss::Mse),
            "huber" => Ok(Loss::huber()),
            other => Err(Error::config(format!("unknown loss `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_residual_is_zero_loss() {
        assert_eq!(Loss::Mse.value(0.3, 0.3), 0.0);
        assert_eq!(Loss::huber().value(0.3, 0.3), 0.0);
    }

    #[test]
    fn huber_branches() {
        let h = Loss::huber();
        assert!((h.value(0.5, 0.0) - 0.125).abs() < 1e-15);
        assert!((h.value(1.0, 0.0) - 0.455).abs() < 1e-15);
        assert!((h.value(-1.0, 0.0) - 0.455).abs() < 1e-15);
    }

    #[test]
    fn huber_is_c1_at_delta() {
        let h = Loss::huber();
        let eps = 1e-9;
        let below = h.value(0.7 - eps, 0.0);
        let above = h.value(0.7 + eps, 0.0);
        assert!((below - above).abs() < 1e-8);
        assert!((h.derivative(0.7 - eps, 0.0) - h.derivative(0.7 + eps, 0.0)).abs() < 1e-8);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let step = 1e-6;
        for loss in [Loss::Mse, Loss::huber()] {
            for &r in &[-2.0, -0.71, -0.3, 0.05, 0.4, 0.69, 1.5] {
                let fd = (loss.value(r + step, 0.0) - loss.value(r - step, 0.0)) / (2.0 * step);
                assert!((fd - loss.derivative(r, 0.0)).abs() < 1e-6, "{loss} at {r}");
            }
        }
    }

    #[test]
    fn rejects_bad_delta() {
        assert!(Loss::Huber { delta: 0.0 }.validate().is_err());
        assert!(Loss::Huber { delta: -1.0 }.validate().is_err());
        assert!(Loss::huber().validate().is_ok());
    }
}
