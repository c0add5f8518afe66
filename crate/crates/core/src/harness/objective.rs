//! The per-sample training objective `f(λ, x) = E(F(x, λ), g(x)) + α(λ)` and
//! the mean error `ℰ`.

use rand::Rng;

use crate::augmentation::{analytic_gradient_bound, AugmentationSpec, BoundCertificate};
use crate::graph::AcyclicNet;
use crate::harness::target::Target;
use crate::optimizer::{estimate_mean, Measure, Objective, OptimizerError};
use crate::propagation::layered::{error_and_grad_layered, LayeredShape, LayeredWeights};
use crate::propagation::{error_and_grad, WeightVector};

/// Squared error through one of the two propagation engines, plus the
/// augmentation.
#[derive(Debug, Clone)]
pub struct NetObjective {
    pub net: AcyclicNet,
    /// Set when propagating layer by layer instead of over the graph.
    pub layered: Option<LayeredShape>,
    pub target: Target,
    pub augmentation: AugmentationSpec,
    pub certificate: Option<BoundCertificate>,
    pub graph_height: usize,
}

impl NetObjective {
    /// `E(F(x, λ), g(x))` and `∇_λ E`.
    pub fn error_and_grad(&self, lambda: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>), OptimizerError> {
        let y = self.target.eval(x);
        let w = WeightVector::new(lambda.to_vec());
        match &self.layered {
            None => {
                let (e, g) = error_and_grad(&self.net, &w, x, &y).map_err(|e| OptimizerError::Objective(e.to_string()))?;
                Ok((e, g.dlambda))
            }
            Some(shape) => {
                let lw = LayeredWeights::from_flat(shape, &w).map_err(|e| OptimizerError::Objective(e.to_string()))?;
                let (e, g) = error_and_grad_layered(shape, &lw, x, &y).map_err(|e| OptimizerError::Objective(e.to_string()))?;
                Ok((e, g.into_inner()))
            }
        }
    }
}

impl Objective for NetObjective {
    fn dim(&self) -> usize {
        self.net.edge_count()
    }

    fn value_and_grad(&self, lambda: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>), OptimizerError> {
        let (e, mut g) = self.error_and_grad(lambda, x)?;
        if !self.augmentation.is_adequate() {
            return Ok((e, g));
        }
        for (gi, ai) in g.iter_mut().zip(self.augmentation.grad(lambda)) {
            *gi += ai;
        }
        Ok((e + self.augmentation.value(lambda), g))
    }

    fn gradient_bound(&self, radius: f64) -> Option<f64> {
        self.certificate
            .as_ref()
            .map(|c| analytic_gradient_bound(c, &self.augmentation, self.graph_height, radius))
    }
}

/// `ℰ(λ) = ∫ E(F(x, λ), g(x)) dμ(x)` with `∇(ℰ + α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanErrorEstimate {
    pub error: f64,
    pub error_se: f64,
    /// `ℰ + α`.
    pub augmented: f64,
    /// `∇(ℰ + α)`.
    pub grad: Vec<f64>,
    pub exact: bool,
}

pub struct MeanError<'a> {
    pub objective: &'a NetObjective,
    pub measure: &'a Measure,
}

impl MeanError<'_> {
    pub fn evaluate<R: Rng + ?Sized>(&self, lambda: &[f64], mc_samples: usize, rng: &mut R) -> Result<MeanErrorEstimate, OptimizerError> {
        let m = estimate_mean(self.objective, self.measure, lambda, mc_samples, rng)?;
        let alpha = self.objective.augmentation.value(lambda);
        Ok(MeanErrorEstimate { error: m.value - alpha, error_se: m.value_se, augmented: m.value, grad: m.grad, exact: m.exact })
    }
}
