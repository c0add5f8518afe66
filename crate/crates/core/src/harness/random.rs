//! Random valid networks for gradient checks and property tests.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::activation::Activation;
use crate::graph::{feed_forward, AcyclicNet, NetDescription};

/// A random acyclic net with `3..=max_vertices` vertices and bounded
/// activations. Vertex labels are shuffled so that id order and topological
/// order disagree.
pub fn random_dag<R: Rng + ?Sized>(rng: &mut R, max_vertices: usize, edge_prob: f64) -> AcyclicNet {
    let n = rng.random_range(3..=max_vertices.max(3));
    let n_in = rng.random_range(1..=(n - 1).min(3));
    let n_out = rng.random_range(1..=(n - n_in).min(3));
    let is_input = |v: usize| v < n_in;
    let is_output = |v: usize| v >= n - n_out;
    let mut adj = vec![vec![false; n]; n];
    for s in 0..n {
        for t in s + 1..n {
            if !is_output(s) && !is_input(t) && rng.random_bool(edge_prob) {
                adj[s][t] = true;
            }
        }
    }
    // every non-input needs a predecessor, every non-output a successor
    for t in n_in..n {
        if !(0..t).any(|s| adj[s][t]) {
            let s = rng.random_range(0..t.min(n - n_out));
            adj[s][t] = true;
        }
    }
    for s in 0..n - n_out {
        if !(s + 1..n).any(|t| adj[s][t]) {
            let t = rng.random_range(n_in.max(s + 1)..n);
            adj[s][t] = true;
        }
    }
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(rng);
    let id = |v: usize| format!("v{:02}", labels[v]);
    let mut activations = BTreeMap::new();
    for v in n_in..n - n_out {
        activations.insert(id(v), Activation::BOUNDED[rng.random_range(0..Activation::BOUNDED.len())]);
    }
    let adj = &adj;
    let desc = NetDescription {
        vertices: (0..n).map(id).collect(),
        edges: (0..n)
            .flat_map(|s| (0..n).filter(move |&t| adj[s][t]).map(move |t| (s, t)))
            .map(|(s, t)| (id(s), id(t)))
            .collect(),
        inputs: (0..n_in).map(id).collect(),
        outputs: (n - n_out..n).map(id).collect(),
        activations,
    };
    AcyclicNet::validate(&desc).expect("generated description is valid")
}

/// Random layer sizes bounded by `[4, 5, 5, 2]`: 2 to 4 layers.
pub fn random_layer_sizes<R: Rng + ?Sized>(rng: &mut R) -> Vec<usize> {
    let layers = rng.random_range(2..=4);
    let mut sizes = vec![rng.random_range(1..=4)];
    for _ in 0..layers - 2 {
        sizes.push(rng.random_range(1..=5));
    }
    sizes.push(rng.random_range(1..=2));
    sizes
}

/// Feed-forward net with random sizes and one random bounded activation per
/// hidden layer.
pub fn random_feed_forward<R: Rng + ?Sized>(rng: &mut R) -> (Vec<usize>, Vec<Activation>, AcyclicNet) {
    let sizes = random_layer_sizes(rng);
    let acts: Vec<Activation> = (0..sizes.len() - 2)
        .map(|_| Activation::BOUNDED[rng.random_range(0..Activation::BOUNDED.len())])
        .collect();
    let net = feed_forward(&sizes, &acts).expect("valid sizes");
    (sizes, acts, net)
}

pub fn uniform_vec<R: Rng + ?Sized>(rng: &mut R, n: usize, half_width: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-half_width..=half_width)).collect()
}
