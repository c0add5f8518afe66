//! Scalar activation functions for hidden vertices.
//!
//! Each bounded activation carries a uniform constant `M_σ` with
//! `|σ|, |σ'|, |σ''| ≤ M_σ` on the whole real line. Those bounds feed the
//! gradient certificate, so only the bounded kinds are accepted when a
//! network is trained in provable mode. `Relu` and `Identity` exist for the
//! classical back-propagation baseline only.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Tanh,
    Logistic,
    /// `e^{-t²}`.
    #[serde(alias = "gaussian-bump")]
    Gaussian,
    Relu,
    Identity,
}

impl Activation {
    pub const BOUNDED: [Activation; 3] = [Activation::Tanh, Activation::Logistic, Activation::Gaussian];

    pub fn value(self, t: f64) -> f64 {
        match self {
            Activation::Tanh => t.tanh(),
            Activation::Logistic => logistic(t),
            Activation::Gaussian => (-t * t).exp(),
            Activation::Relu => t.max(0.0),
            Activation::Identity => t,
        }
    }

    pub fn derivative(self, t: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let th = t.tanh();
                1.0 - th * th
            }
            Activation::Logistic => {
                let s = logistic(t);
                s * (1.0 - s)
            }
            Activation::Gaussian => -2.0 * t * (-t * t).exp(),
            Activation::Relu => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn second_derivative(self, t: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let th = t.tanh();
                -2.0 * th * (1.0 - th * th)
            }
            Activation::Logistic => {
                let s = logistic(t);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            Activation::Gaussian => (4.0 * t * t - 2.0) * (-t * t).exp(),
            Activation::Relu | Activation::Identity => 0.0,
        }
    }

    /// Uniform bound on `|σ|`, `|σ'|` and `|σ''|`, or `None` when the
    /// activation is not uniformly C²-bounded.
    pub fn bound(self) -> Option<f64> {
        match self {
            Activation::Tanh | Activation::Logistic => Some(1.0),
            // |σ''| peaks at 2 for t = 0
            Activation::Gaussian => Some(2.0),
            Activation::Relu | Activation::Identity => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Logistic => "logistic",
            Activation::Gaussian => "gaussian",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown activation `{0}`")]
pub struct UnknownActivation(pub String);

impl FromStr for Activation {
    type Err = UnknownActivation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "logistic" | "sigmoid" => Ok(Activation::Logistic),
            "gaussian" | "gaussian-bump" => Ok(Activation::Gaussian),
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(UnknownActivation(other.to_string())),
        }
    }
}
