//! Finite-difference check of the backward pass on random instances.

use serde::Serialize;

use crate::graph::AcyclicNet;
use crate::harness::random::{random_dag, random_feed_forward, uniform_vec};
use crate::optimizer::step_rng;
use crate::propagation::{error_and_grad, squared_error, PropagationError, WeightVector};
use crate::sampling::uniform_in_ball;

/// A component passes when `|a − b| ≤ ABS_TOL` or `|a − b| ≤ REL_TOL·max(|a|, |b|)`.
pub const ABS_TOL: f64 = 1e-8;
pub const REL_TOL: f64 = 1e-6;
/// The command line fails above this relative error.
pub const EXIT_THRESHOLD: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentCheck {
    pub analytic: f64,
    pub numeric: f64,
    pub abs_error: f64,
    /// Zero when within the absolute tolerance.
    pub rel_error: f64,
}

impl ComponentCheck {
    pub fn new(analytic: f64, numeric: f64) -> Self {
        let abs_error = (analytic - numeric).abs();
        let scale = analytic.abs().max(numeric.abs());
        let rel_error = if abs_error <= ABS_TOL { 0.0 } else { abs_error / scale };
        ComponentCheck { analytic, numeric, abs_error, rel_error }
    }

    pub fn passes(&self) -> bool {
        self.abs_error <= ABS_TOL || self.rel_error <= REL_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub instances: usize,
    pub components: usize,
    pub failures: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Central differences of `E = ‖F(x, λ) − y‖²` in every weight, step
/// `1e-6·max(1, |λ_e|)`.
pub fn finite_difference(net: &AcyclicNet, w: &WeightVector, x: &[f64], y: &[f64]) -> Result<Vec<f64>, PropagationError> {
    let mut probe = w.clone();
    let mut out = Vec::with_capacity(w.len());
    for e in 0..w.len() {
        let base = w.as_slice()[e];
        let h = 1e-6 * base.abs().max(1.0);
        probe.as_mut_slice()[e] = base + h;
        let up = squared_error(net, &probe, x, y)?;
        probe.as_mut_slice()[e] = base - h;
        let down = squared_error(net, &probe, x, y)?;
        probe.as_mut_slice()[e] = base;
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Compares the backward pass with finite differences at one point.
pub fn check_instance(net: &AcyclicNet, w: &WeightVector, x: &[f64], y: &[f64]) -> Result<Vec<ComponentCheck>, PropagationError> {
    let (_, g) = error_and_grad(net, w, x, y)?;
    let fd = finite_difference(net, w, x, y)?;
    Ok(g.dlambda.iter().zip(&fd).map(|(&a, &n)| ComponentCheck::new(a, n)).collect())
}

/// One random instance: even indices are DAGs with at most 10 vertices, odd
/// ones feed-forward nets up to `[4, 5, 5, 2]`.
pub fn random_instance(seed: u64, index: u64) -> (AcyclicNet, WeightVector, Vec<f64>, Vec<f64>) {
    let mut rng = step_rng(seed, index);
    let net = if index.is_multiple_of(2) { random_dag(&mut rng, 10, 0.4) } else { random_feed_forward(&mut rng).2 };
    let w = WeightVector::new(uniform_vec(&mut rng, net.edge_count(), 1.5));
    let x = uniform_in_ball(&mut rng, net.input_count(), 1.0);
    let y = uniform_vec(&mut rng, net.output_count(), 1.0);
    (net, w, x, y)
}

pub fn grad_check(instances: usize, seed: u64) -> Result<GradCheckReport, PropagationError> {
    let mut report = GradCheckReport { instances, components: 0, failures: 0, max_rel_error: 0.0, max_abs_error: 0.0 };
    for i in 0..instances as u64 {
        let (net, w, x, y) = random_instance(seed, i);
        for c in check_instance(&net, &w, &x, &y)? {
            report.components += 1;
            if !c.passes() {
                report.failures += 1;
            }
            report.max_rel_error = report.max_rel_error.max(c.rel_error);
            report.max_abs_error = report.max_abs_error.max(c.abs_error);
        }
    }
    Ok(report)
}
