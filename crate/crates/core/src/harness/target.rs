//! Bounded target functions `g: B_ρ → ℝ^m` with a known bound `Ω_ρ ≥ sup ‖g‖`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{AcyclicNet, NetworkSpec, Role};
use crate::harness::HarnessError;
use crate::propagation::{forward, norm, WeightVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    /// `g_j(x) = a_j tanh(w_jᵀ x)`.
    LinearTanh { amplitude: Vec<f64>, weights: Vec<Vec<f64>> },
    /// A fixed net with bounded activations. Missing weights are drawn
    /// uniformly in `[−scale, scale]` from `seed`.
    Teacher {
        network: NetworkSpec,
        #[serde(default)]
        weights: Option<Vec<f64>>,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    Constant { value: Vec<f64> },
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone)]
pub enum Target {
    LinearTanh { amplitude: Vec<f64>, weights: Vec<Vec<f64>> },
    Teacher { net: AcyclicNet, weights: WeightVector },
    Constant(Vec<f64>),
}

impl TargetSpec {
    pub fn build(&self, input_dim: usize, output_dim: usize) -> Result<Target, HarnessError> {
        let target = match self {
            TargetSpec::LinearTanh { amplitude, weights } => {
                if amplitude.len() != weights.len() {
                    return Err(HarnessError::Config("linear-tanh needs one weight row per amplitude".into()));
                }
                if weights.iter().any(|w| w.len() != input_dim) {
                    return Err(HarnessError::Config(format!("linear-tanh weight rows must have length {input_dim}")));
                }
                Target::LinearTanh { amplitude: amplitude.clone(), weights: weights.clone() }
            }
            TargetSpec::Teacher { network, weights, seed, scale } => {
                let net = network.build()?;
                if net.activation_bound().is_none() {
                    return Err(HarnessError::Config("teacher activations must be bounded".into()));
                }
                if net.input_count() != input_dim {
                    return Err(HarnessError::Config(format!("teacher has {} inputs, expected {input_dim}", net.input_count())));
                }
                let weights = match weights {
                    Some(w) if w.len() == net.edge_count() => WeightVector::new(w.clone()),
                    Some(w) => {
                        return Err(HarnessError::Config(format!("teacher needs {} weights, got {}", net.edge_count(), w.len())))
                    }
                    None => {
                        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                        WeightVector::new((0..net.edge_count()).map(|_| rng.random_range(-*scale..=*scale)).collect())
                    }
                };
                Target::Teacher { net, weights }
            }
            TargetSpec::Constant { value } => Target::Constant(value.clone()),
        };
        if target.output_dim() != output_dim {
            return Err(HarnessError::Config(format!("target has {} outputs, network has {output_dim}", target.output_dim())));
        }
        Ok(target)
    }
}

impl Target {
    pub fn output_dim(&self) -> usize {
        match self {
            Target::LinearTanh { amplitude, .. } => amplitude.len(),
            Target::Teacher { net, .. } => net.output_count(),
            Target::Constant(v) => v.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Target::LinearTanh { amplitude, weights } => amplitude
                .iter()
                .zip(weights)
                .map(|(a, w)| a * w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>().tanh())
                .collect(),
            Target::Teacher { net, weights } => forward(net, weights, x).expect("teacher dimensions checked at build").output,
            Target::Constant(v) => v.clone(),
        }
    }

    /// `Ω_ρ` with `‖g(x)‖ ≤ Ω_ρ` on `B_ρ`.
    pub fn omega(&self, rho: f64) -> f64 {
        match self {
            Target::LinearTanh { amplitude, weights } => {
                let per: Vec<f64> = amplitude.iter().zip(weights).map(|(a, w)| a.abs() * (rho * norm(w)).tanh()).collect();
                norm(&per)
            }
            Target::Teacher { net, weights } => teacher_bound(net, weights, rho),
            Target::Constant(v) => norm(v),
        }
    }
}

/// Propagates `|z(v)| ≤ b(v)`: inputs by `ρ`, hidden vertices by their
/// activation bound, outputs by `Σ |λ(e)| b(s(e))`.
fn teacher_bound(net: &AcyclicNet, weights: &WeightVector, rho: f64) -> f64 {
    let lambda = weights.as_slice();
    let mut b = vec![0.0; net.vertex_count()];
    for &v in net.topological_order() {
        b[v] = match net.role(v) {
            Role::Input => rho,
            Role::Hidden => net.activation(v).and_then(|a| a.bound()).unwrap_or(f64::INFINITY),
            Role::Output => net.in_edges(v).iter().map(|&e| lambda[e].abs() * b[net.edge(e).source]).sum(),
        };
    }
    norm(&net.outputs().iter().map(|&u| b[u]).collect::<Vec<_>>())
}
