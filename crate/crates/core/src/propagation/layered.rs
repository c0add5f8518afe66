//! Layer-by-layer propagation for fully connected feed-forward nets.
//!
//! Layers are numbered top-down: the input layer is `l+1`, the output layer
//! is `0`. The weight `λ^i_{j,j'}` joins node `j` of layer `i` to node `j'`
//! of layer `i-1`. This path exists independently of the graph engine so the
//! two can be checked against each other.

use crate::activation::Activation;
use crate::propagation::{PropagationError, WeightVector};

/// Shape of a layered net: sizes input-first plus one activation per hidden
/// layer (top to bottom).
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredShape {
    sizes: Vec<usize>,
    activations: Vec<Activation>,
}

impl LayeredShape {
    pub fn new(sizes: Vec<usize>, activations: Vec<Activation>) -> Result<Self, PropagationError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(PropagationError::DimensionMismatch { what: "layer sizes", expected: 2, got: sizes.len() });
        }
        let hidden = sizes.len() - 2;
        let activations = if activations.len() == 1 && hidden != 1 { vec![activations[0]; hidden] } else { activations };
        if activations.len() != hidden {
            return Err(PropagationError::DimensionMismatch {
                what: "hidden activations",
                expected: hidden,
                got: activations.len(),
            });
        }
        Ok(LayeredShape { sizes, activations })
    }

    /// Index of the top (input) layer, `l+1`.
    pub fn top(&self) -> usize {
        self.sizes.len() - 1
    }

    /// `n_i` for layer `i`, counted from the output.
    pub fn width(&self, i: usize) -> usize {
        self.sizes[self.top() - i]
    }

    fn activation(&self, i: usize) -> Option<Activation> {
        if i == 0 || i == self.top() {
            None
        } else {
            Some(self.activations[self.top() - i - 1])
        }
    }

    /// `N = Σ_{i=1}^{l+1} n_i n_{i-1}`.
    pub fn weight_count(&self) -> usize {
        (1..=self.top()).map(|i| self.width(i) * self.width(i - 1)).sum()
    }
}

/// Per-layer weight matrices; `matrices[i-1]` is `Λ^i`, row-major `n_i × n_{i-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredWeights {
    pub matrices: Vec<Vec<f64>>,
}

impl LayeredWeights {
    /// Splits a flat canonical weight vector of the built feed-forward graph
    /// into per-layer matrices.
    pub fn from_flat(shape: &LayeredShape, flat: &WeightVector) -> Result<Self, PropagationError> {
        if flat.len() != shape.weight_count() {
            return Err(PropagationError::DimensionMismatch { what: "weights", expected: shape.weight_count(), got: flat.len() });
        }
        let mut matrices = Vec::with_capacity(shape.top());
        let mut offset = 0;
        for i in 1..=shape.top() {
            let len = shape.width(i) * shape.width(i - 1);
            matrices.push(flat.as_slice()[offset..offset + len].to_vec());
            offset += len;
        }
        Ok(LayeredWeights { matrices })
    }

    pub fn to_flat(&self) -> WeightVector {
        WeightVector::new(self.matrices.concat())
    }

    fn get(&self, shape: &LayeredShape, i: usize, j: usize, jp: usize) -> f64 {
        self.matrices[i - 1][j * shape.width(i - 1) + jp]
    }
}

/// Node values `z^i_j` and weighted sums for every layer, indexed by `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredRecord {
    pub pre: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

impl LayeredRecord {
    pub fn output(&self) -> &[f64] {
        &self.z[0]
    }
}

pub fn forward_layered(shape: &LayeredShape, weights: &LayeredWeights, x: &[f64]) -> Result<LayeredRecord, PropagationError> {
    let top = shape.top();
    if x.len() != shape.width(top) {
        return Err(PropagationError::DimensionMismatch { what: "input", expected: shape.width(top), got: x.len() });
    }
    check_weights(shape, weights)?;
    let mut pre = vec![Vec::new(); top + 1];
    let mut z = vec![Vec::new(); top + 1];
    pre[top] = x.to_vec();
    z[top] = x.to_vec();
    for i in (0..top).rev() {
        let above = &z[i + 1];
        let mut s_i = Vec::with_capacity(shape.width(i));
        let mut z_i = Vec::with_capacity(shape.width(i));
        for j in 0..shape.width(i) {
            let s: f64 = (0..shape.width(i + 1)).map(|jp| weights.get(shape, i + 1, jp, j) * above[jp]).sum();
            s_i.push(s);
            z_i.push(shape.activation(i).map_or(s, |a| a.value(s)));
        }
        pre[i] = s_i;
        z[i] = z_i;
    }
    Ok(LayeredRecord { pre, z })
}

/// Gradient of `E` with respect to every `λ^i_{j,j'}`, returned as per-layer
/// matrices, seeded with `∂E/∂z^0`.
pub fn backward_layered(
    shape: &LayeredShape,
    weights: &LayeredWeights,
    record: &LayeredRecord,
    de_dz_out: &[f64],
) -> Result<LayeredWeights, PropagationError> {
    let top = shape.top();
    if de_dz_out.len() != shape.width(0) {
        return Err(PropagationError::DimensionMismatch { what: "output gradient", expected: shape.width(0), got: de_dz_out.len() });
    }
    check_weights(shape, weights)?;
    if record.z.len() != top + 1 || (0..=top).any(|i| record.z[i].len() != shape.width(i)) {
        return Err(PropagationError::StaleRecord);
    }
    let mut dz_below = de_dz_out.to_vec();
    let mut grads = vec![Vec::new(); top];
    for i in 1..=top {
        let below = i - 1;
        // ∂E/∂z^{i-1}_{j'} · (σ^{i-1}_{j'})'(Σ_p λ^i_{p,j'} z^i_p)
        let delta: Vec<f64> = (0..shape.width(below))
            .map(|jp| match shape.activation(below) {
                Some(a) => dz_below[jp] * a.derivative(record.pre[below][jp]),
                None => dz_below[jp],
            })
            .collect();
        let mut g = vec![0.0; shape.width(i) * shape.width(below)];
        let mut dz_i = vec![0.0; shape.width(i)];
        for j in 0..shape.width(i) {
            dz_i[j] = (0..shape.width(below)).map(|jp| delta[jp] * weights.get(shape, i, j, jp)).sum();
            for jp in 0..shape.width(below) {
                g[j * shape.width(below) + jp] = delta[jp] * record.z[i][j];
            }
        }
        grads[i - 1] = g;
        dz_below = dz_i;
    }
    Ok(LayeredWeights { matrices: grads })
}

fn check_weights(shape: &LayeredShape, weights: &LayeredWeights) -> Result<(), PropagationError> {
    if weights.matrices.len() != shape.top() {
        return Err(PropagationError::DimensionMismatch { what: "weight layers", expected: shape.top(), got: weights.matrices.len() });
    }
    for i in 1..=shape.top() {
        let expected = shape.width(i) * shape.width(i - 1);
        if weights.matrices[i - 1].len() != expected {
            return Err(PropagationError::DimensionMismatch { what: "weight matrix", expected, got: weights.matrices[i - 1].len() });
        }
    }
    Ok(())
}

/// Squared error and its flat gradient through the layered path.
pub fn error_and_grad_layered(
    shape: &LayeredShape,
    weights: &LayeredWeights,
    x: &[f64],
    y: &[f64],
) -> Result<(f64, WeightVector), PropagationError> {
    let record = forward_layered(shape, weights, x)?;
    if y.len() != shape.width(0) {
        return Err(PropagationError::DimensionMismatch { what: "target", expected: shape.width(0), got: y.len() });
    }
    let residual: Vec<f64> = record.output().iter().zip(y).map(|(z, y)| z - y).collect();
    let e = residual.iter().map(|r| r * r).sum();
    let seed: Vec<f64> = residual.iter().map(|r| 2.0 * r).collect();
    let grads = backward_layered(shape, weights, &record, &seed)?;
    Ok((e, grads.to_flat()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_linear_edge() {
        let shape = LayeredShape::new(vec![1, 1], vec![]).unwrap();
        let w = LayeredWeights { matrices: vec![vec![3.0]] };
        assert_eq!(forward_layered(&shape, &w, &[2.0]).unwrap().output(), &[6.0]);
    }

    #[test]
    fn zero_weights_zero_output() {
        let shape = LayeredShape::new(vec![2, 3, 1], vec![Activation::Tanh]).unwrap();
        let w = LayeredWeights::from_flat(&shape, &WeightVector::zeros(9)).unwrap();
        assert_eq!(forward_layered(&shape, &w, &[0.7, -1.1]).unwrap().output(), &[0.0]);
    }

    #[test]
    fn flat_round_trip() {
        let shape = LayeredShape::new(vec![4, 5, 5, 2], vec![Activation::Tanh]).unwrap();
        assert_eq!(shape.weight_count(), 55);
        let flat = WeightVector::new((0..55).map(|i| i as f64).collect());
        let w = LayeredWeights::from_flat(&shape, &flat).unwrap();
        assert_eq!(w.matrices[0].len(), 10);
        assert_eq!(w.matrices[2].len(), 20);
        assert_eq!(w.to_flat(), flat);
    }

    #[test]
    fn shape_errors() {
        assert!(LayeredShape::new(vec![2], vec![]).is_err());
        assert!(LayeredShape::new(vec![2, 3, 3, 1], vec![Activation::Tanh; 3]).is_err());
        let shape = LayeredShape::new(vec![2, 1], vec![]).unwrap();
        let w = LayeredWeights { matrices: vec![vec![1.0, 1.0]] };
        assert!(forward_layered(&shape, &w, &[1.0]).is_err());
    }
}
