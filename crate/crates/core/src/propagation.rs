//! Forward and backward propagation over acyclic networks.
//!
//! Output vertices apply the identity, input vertices copy the input vector.
//! The backward pass reuses the pre-activations stored by the forward pass,
//! so every `σ'` is evaluated at exactly the weighted sum seen going forward.

use serde::{Deserialize, Serialize};

use crate::graph::{AcyclicNet, Role};

pub mod layered;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PropagationError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("activation record does not match the network")]
    StaleRecord,
    #[error("non-finite weight at edge {0}")]
    NonFiniteWeight(usize),
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), PropagationError> {
    if expected == got {
        Ok(())
    } else {
        Err(PropagationError::DimensionMismatch { what, expected, got })
    }
}

/// Edge weights `λ` in canonical edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Self {
        WeightVector(values)
    }

    pub fn zeros(n: usize) -> Self {
        WeightVector(vec![0.0; n])
    }

    /// Builds the vector from `(source id, target id) -> weight` pairs. Every
    /// edge of the net must be given exactly once.
    pub fn from_edges<'a, I>(net: &AcyclicNet, pairs: I) -> Result<Self, PropagationError>
    where
        I: IntoIterator<Item = ((&'a str, &'a str), f64)>,
    {
        let mut values = vec![f64::NAN; net.edge_count()];
        let mut count = 0;
        for ((s, t), w) in pairs {
            let e = net.edge_index(s, t).ok_or(PropagationError::StaleRecord)?;
            values[e] = w;
            count += 1;
        }
        check_len("edge weights", net.edge_count(), count)?;
        Ok(WeightVector(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|w| w.is_finite())
    }

    /// `(source id, target id, weight)` triples in canonical order.
    pub fn labelled<'a>(&'a self, net: &'a AcyclicNet) -> impl Iterator<Item = (&'a str, &'a str, f64)> + 'a {
        net.edges().iter().zip(&self.0).map(|(e, &w)| (net.id(e.source), net.id(e.target), w))
    }
}

impl From<Vec<f64>> for WeightVector {
    fn from(v: Vec<f64>) -> Self {
        WeightVector(v)
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Everything the forward pass computed, indexed by vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRecord {
    /// Weighted sum `Σ λ(e) z(s(e))` into each vertex; for inputs this holds
    /// the input value itself.
    pub pre_activation: Vec<f64>,
    pub post_activation: Vec<f64>,
    /// `z = [z(u_1), …, z(u_m)]`.
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientRecord {
    /// `∂E/∂z(v)` per vertex.
    pub dz: Vec<f64>,
    /// `∂E/∂λ(e)` in canonical edge order.
    pub dlambda: Vec<f64>,
}

pub fn forward(net: &AcyclicNet, weights: &WeightVector, x: &[f64]) -> Result<ActivationRecord, PropagationError> {
    check_len("input", net.input_count(), x.len())?;
    check_len("weights", net.edge_count(), weights.len())?;
    let n = net.vertex_count();
    let lambda = weights.as_slice();
    let mut pre = vec![0.0; n];
    let mut post = vec![0.0; n];
    for (&v, &xi) in net.inputs().iter().zip(x) {
        pre[v] = xi;
        post[v] = xi;
    }
    for &v in net.topological_order() {
        if net.role(v) == Role::Input {
            continue;
        }
        let s: f64 = net.in_edges(v).iter().map(|&e| lambda[e] * post[net.edge(e).source]).sum();
        pre[v] = s;
        post[v] = match net.activation(v) {
            Some(act) => act.value(s),
            None => s,
        };
    }
    let output = net.outputs().iter().map(|&u| post[u]).collect();
    Ok(ActivationRecord { pre_activation: pre, post_activation: post, output })
}

/// Reverse-mode pass seeded with `∂E/∂z` at the outputs.
pub fn backward(
    net: &AcyclicNet,
    weights: &WeightVector,
    record: &ActivationRecord,
    de_dz_out: &[f64],
) -> Result<GradientRecord, PropagationError> {
    check_len("output gradient", net.output_count(), de_dz_out.len())?;
    check_len("weights", net.edge_count(), weights.len())?;
    let n = net.vertex_count();
    if record.pre_activation.len() != n || record.post_activation.len() != n || record.output.len() != net.output_count() {
        return Err(PropagationError::StaleRecord);
    }
    let lambda = weights.as_slice();
    let mut dz = vec![0.0; n];
    for (&u, &g) in net.outputs().iter().zip(de_dz_out) {
        dz[u] = g;
    }
    // δ(v) = ∂E/∂z(v) · σ_v'(pre(v)); identity at outputs
    let mut delta = vec![0.0; n];
    let mut dlambda = vec![0.0; net.edge_count()];
    for &v in net.topological_order().iter().rev() {
        if net.role(v) != Role::Output {
            dz[v] = net.out_edges(v).iter().map(|&e| delta[net.edge(e).target] * lambda[e]).sum();
        }
        delta[v] = match net.activation(v) {
            Some(act) => dz[v] * act.derivative(record.pre_activation[v]),
            None => dz[v],
        };
        for &e in net.in_edges(v) {
            dlambda[e] = delta[v] * record.post_activation[net.edge(e).source];
        }
    }
    Ok(GradientRecord { dz, dlambda })
}

/// Squared error `E = ‖z − y‖²` and its gradient.
pub fn error_and_grad(
    net: &AcyclicNet,
    weights: &WeightVector,
    x: &[f64],
    y: &[f64],
) -> Result<(f64, GradientRecord), PropagationError> {
    check_len("target", net.output_count(), y.len())?;
    let record = forward(net, weights, x)?;
    let residual: Vec<f64> = record.output.iter().zip(y).map(|(z, y)| z - y).collect();
    let e = residual.iter().map(|r| r * r).sum();
    let seed: Vec<f64> = residual.iter().map(|r| 2.0 * r).collect();
    let grad = backward(net, weights, &record, &seed)?;
    Ok((e, grad))
}

pub fn squared_error(net: &AcyclicNet, weights: &WeightVector, x: &[f64], y: &[f64]) -> Result<f64, PropagationError> {
    check_len("target", net.output_count(), y.len())?;
    let record = forward(net, weights, x)?;
    Ok(record.output.iter().zip(y).map(|(z, y)| (z - y) * (z - y)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::graph::{feed_forward, NetDescription};

    fn chain() -> AcyclicNet {
        let desc: NetDescription = serde_json::from_str(
            r#"{"vertices":["x","h","z"],"edges":[["x","h"],["h","z"]],"inputs":["x"],"outputs":["z"],"activations":{"h":"tanh"}}"#,
        )
        .unwrap();
        AcyclicNet::validate(&desc).unwrap()
    }

    // canonical order is (h,z), (x,h)
    fn chain_weights(w_in: f64, w_out: f64) -> WeightVector {
        WeightVector::new(vec![w_out, w_in])
    }

    #[test]
    fn chain_forward_values() {
        let net = chain();
        let r = forward(&net, &chain_weights(1.0, 1.0), &[0.0]).unwrap();
        assert_eq!(r.output, vec![0.0]);
        let r = forward(&net, &chain_weights(2.0, 0.5), &[1.0]).unwrap();
        // 0.5·tanh(2), from mpmath at 30 digits
        assert!((r.output[0] - 0.48201379003790845).abs() < 1e-15);
    }

    #[test]
    fn chain_output_gradient() {
        let net = chain();
        let (e, g) = error_and_grad(&net, &chain_weights(2.0, 0.5), &[1.0], &[0.0]).unwrap();
        let z = 0.5 * 2f64.tanh();
        assert!((e - z * z).abs() < 1e-15);
        // 2z·tanh(2) from mpmath at 30 digits
        assert!((g.dlambda[0] - 0.929_349_175_146_835_5).abs() < 1e-14);
        assert!((g.dlambda[0] - 2.0 * z * 2f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn zero_seed_gives_zero_gradient() {
        let net = feed_forward(&[2, 3, 2], &[Activation::Logistic]).unwrap();
        let w = WeightVector::new((0..net.edge_count()).map(|i| (i as f64).sin()).collect());
        let r = forward(&net, &w, &[0.3, -0.2]).unwrap();
        let g = backward(&net, &w, &r, &[0.0, 0.0]).unwrap();
        assert!(g.dlambda.iter().chain(&g.dz).all(|&d| d == 0.0));
    }

    #[test]
    fn zero_weights_give_sigma_zero_hidden_and_zero_output() {
        let net = feed_forward(&[2, 3, 1], &[Activation::Logistic]).unwrap();
        let r = forward(&net, &WeightVector::zeros(net.edge_count()), &[1.0, -2.0]).unwrap();
        for v in 0..net.vertex_count() {
            if net.role(v) == Role::Hidden {
                assert_eq!(r.post_activation[v], 0.5);
            }
        }
        assert_eq!(r.output, vec![0.0]);
    }

    #[test]
    fn minimum_of_squared_error() {
        let net = chain();
        let w = chain_weights(2.0, 0.5);
        let z = forward(&net, &w, &[1.0]).unwrap().output;
        let (e, g) = error_and_grad(&net, &w, &[1.0], &z).unwrap();
        assert_eq!(e, 0.0);
        assert!(g.dlambda.iter().all(|&d| d == 0.0));
        assert!((0.482f64 * 0.482 - 0.232324).abs() < 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let net = chain();
        let w = chain_weights(1.0, 1.0);
        assert!(matches!(forward(&net, &w, &[1.0, 2.0]), Err(PropagationError::DimensionMismatch { .. })));
        assert!(matches!(error_and_grad(&net, &w, &[1.0], &[1.0, 2.0]), Err(PropagationError::DimensionMismatch { .. })));
        let other = feed_forward(&[1, 2, 1], &[Activation::Tanh]).unwrap();
        let r = forward(&other, &WeightVector::zeros(4), &[1.0]).unwrap();
        assert_eq!(backward(&net, &w, &r, &[1.0]), Err(PropagationError::StaleRecord));
    }

    #[test]
    fn from_edges_uses_canonical_order() {
        let net = chain();
        let w = WeightVector::from_edges(&net, [(("x", "h"), 2.0), (("h", "z"), 0.5)]).unwrap();
        assert_eq!(w, chain_weights(2.0, 0.5));
        let labelled: Vec<_> = w.labelled(&net).collect();
        assert_eq!(labelled[0], ("h", "z", 0.5));
    }
}
