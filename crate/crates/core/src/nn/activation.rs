use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;
pub const SELU_SCALE: f64 = 1.050_700_987_355_480_5;
pub const LEAKY_SLOPE: f64 = 0.01;
pub const PRELU_INIT: f64 = 0.25;

/// Pointwise nonlinearity applied after each dense layer.
///
/// Piecewise-linear kinds (and SELU, whose derivative jumps at zero) use the
/// right-hand derivative at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Sigmoid,
    Tanh,
    Silu,
    Relu,
    LeakyRelu,
    Selu,
    Prelu,
    Sine,
}

impl Activation {
    pub const ALL: [Activation; 9] = [
        Activation::Identity,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Silu,
        Activation::Relu,
        Activation::LeakyRelu,
        Activation::Selu,
        Activation::Prelu,
        Activation::Sine,
    ];

    /// Carries a learnable slope (one per layer).
    pub fn is_parametric(self) -> bool {
        matches!(self, Activation::Prelu)
    }

    /// Has a point where the first derivative is discontinuous (at zero).
    pub fn has_kink(self) -> bool {
        matches!(
            self,
            Activation::Relu | Activation::LeakyRelu | Activation::Prelu | Activation::Selu
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Silu => "silu",
            Activation::Relu => "relu",
            Activation::LeakyRelu => "leakyrelu",
            Activation::Selu => "selu",
            Activation::Prelu => "prelu",
            Activation::Sine => "sine",
        }
    }

    /// Checked evaluation: `slope` must be given exactly when the kind is parametric.
    pub fn eval(self, x: f64, slope: Option<f64>) -> Result<f64> {
        Ok(self.value(x, self.check_slope(slope)?))
    }

    /// Checked derivative with the same slope contract as [`Activation::eval`].
    pub fn eval_derivative(self, x: f64, slope: Option<f64>) -> Result<f64> {
        Ok(self.derivative(x, self.check_slope(slope)?))
    }

    fn check_slope(self, slope: Option<f64>) -> Result<f64> {
        match (self.is_parametric(), slope) {
            (true, Some(a)) => Ok(a),
            (false, None) => Ok(0.0),
            (true, None) => Err(Error::domain(format!("{self} requires a slope parameter"))),
            (false, Some(_)) => Err(Error::domain(format!("{self} takes no parameters"))),
        }
    }

    #[inline]
    pub(crate) fn value(self, x: f64, slope: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Silu => x * sigmoid(x),
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu => {
                if x >= 0.0 {
                    x
                } else {
                    LEAKY_SLOPE * x
                }
            }
            Activation::Selu => {
                if x >= 0.0 {
                    SELU_SCALE * x
                } else {
                    SELU_SCALE * SELU_ALPHA * x.exp_m1()
                }
            }
            Activation::Prelu => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Sine => x.sin(),
        }
    }

    #[inline]
    pub(crate) fn derivative(self, x: f64, slope: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Silu => {
                let s = sigmoid(x);
                s * (1.0 + x * (1.0 - s))
            }
            Activation::Relu => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if x >= 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Selu => {
                if x >= 0.0 {
                    SELU_SCALE
                } else {
                    SELU_SCALE * SELU_ALPHA * x.exp()
                }
            }
            Activation::Prelu => {
                if x >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sine => x.cos(),
        }
    }

    /// Value and derivative together; shares the exponential where possible.
    #[inline]
    pub(crate) fn value_and_derivative(self, x: f64, slope: f64) -> (f64, f64) {
        match self {
            Activation::Sigmoid => {
                let s = sigmoid(x);
                (s, s * (1.0 - s))
            }
            Activation::Silu => {
                let s = sigmoid(x);
                (x * s, s * (1.0 + x * (1.0 - s)))
            }
            Activation::Tanh => {
                let t = x.tanh();
                (t, 1.0 - t * t)
            }
            _ => (self.value(x, slope), self.derivative(x, slope)),
        }
    }

    /// d(activation)/d(slope), nonzero only for PReLU on the negative side.
    #[inline]
    pub(crate) fn slope_derivative(self, x: f64) -> f64 {
        match self {
            Activation::Prelu if x < 0.0 => x,
            _ => 0.0,
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-'))
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "identity" | "linear" => Activation::Identity,
            "sigmoid" => Activation::Sigmoid,
            "tanh" => Activation::Tanh,
            "silu" | "swish" => Activation::Silu,
            "relu" => Activation::Relu,
            "leakyrelu" => Activation::LeakyRelu,
            "selu" => Activation::Selu,
            "prelu" => Activation::Prelu,
            "sine" | "sin" => Activation::Sine,
            _ => return Err(Error::UnsupportedActivation(s.to_string())),
        })
    }
}
