//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use augsgd_core::graph::AcyclicNet;
use augsgd_core::propagation::{squared_error, WeightVector};

/// Longest path lengths ending at / starting from every vertex, by
/// enumerating every directed path.
pub fn brute_force_depth_height(net: &AcyclicNet) -> (Vec<usize>, Vec<usize>) {
    let n = net.vertex_count();
    let mut depth = vec![0; n];
    let mut height = vec![0; n];
    fn walk(net: &AcyclicNet, start: usize, v: usize, len: usize, depth: &mut [usize], height: &mut [usize]) {
        depth[v] = depth[v].max(len);
        height[start] = height[start].max(len);
        for &e in net.out_edges(v) {
            walk(net, start, net.edge(e).target, len + 1, depth, height);
        }
    }
    for v in 0..n {
        walk(net, v, v, 0, &mut depth, &mut height);
    }
    (depth, height)
}

/// Richardson-extrapolated central differences of the squared error; error
/// `O(h⁴)` with `h = 1e-3·max(1, |λ_e|)`.
pub fn richardson_gradient(net: &AcyclicNet, w: &WeightVector, x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut probe = w.clone();
    let mut diff = |e: usize, h: f64| {
        let base = w.as_slice()[e];
        probe.as_mut_slice()[e] = base + h;
        let up = squared_error(net, &probe, x, y).unwrap();
        probe.as_mut_slice()[e] = base - h;
        let down = squared_error(net, &probe, x, y).unwrap();
        probe.as_mut_slice()[e] = base;
        (up - down) / (2.0 * h)
    };
    (0..w.len())
        .map(|e| {
            let h = 1e-3 * w.as_slice()[e].abs().max(1.0);
            let coarse = diff(e, h);
            let fine = diff(e, h / 2.0);
            (4.0 * fine - coarse) / 3.0
        })
        .collect()
}

pub fn close(a: f64, b: f64, abs: f64, rel: f64) -> bool {
    let err = (a - b).abs();
    err <= abs || err <= rel * a.abs().max(b.abs())
}

pub fn chain() -> AcyclicNet {
    let desc = serde_json::from_str(
        r#"{"vertices":["x","h","z"],"edges":[["x","h"],["h","z"]],"inputs":["x"],"outputs":["z"],"activations":{"h":"tanh"}}"#,
    )
    .unwrap();
    AcyclicNet::validate(&desc).unwrap()
}

/// Two inputs, a skip edge and a two-vertex hidden path.
pub fn skip_net() -> AcyclicNet {
    let desc = serde_json::from_str(
        r#"{"vertices":["a","b","p","q","u","w"],
            "edges":[["a","p"],["b","p"],["p","q"],["a","q"],["q","u"],["p","w"],["b","w"]],
            "inputs":["a","b"],"outputs":["u","w"],
            "activations":{"p":"logistic","q":"gaussian"}}"#,
    )
    .unwrap();
    AcyclicNet::validate(&desc).unwrap()
}
