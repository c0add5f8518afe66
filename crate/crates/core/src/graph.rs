//! Acyclic network graphs: validation, topological scheduling, and the
//! depth/height structure that makes propagation well defined.
//!
//! Vertex ids are opaque strings. Internally vertices are indexed in
//! lexicographic id order and edges are kept sorted by `(source id, target
//! id)`; that edge order is the canonical flattening of the weights into a
//! vector.

use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use crate::activation::Activation;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("directed cycle through {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("loop edge on vertex `{0}`")]
    LoopEdge(String),
    #[error("parallel edge `{0}` -> `{1}`")]
    ParallelEdge(String, String),
    #[error("activation mismatch on vertex `{vertex}`: {reason}")]
    DanglingActivation { vertex: String, reason: &'static str },
    #[error("vertex `{0}` is listed as both input and output")]
    InputOutputOverlap(String),
    #[error("edge refers to unknown vertex `{0}`")]
    UnknownVertexInEdge(String),
    #[error("unknown vertex `{0}` in input/output list or activation map")]
    UnknownVertex(String),
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("vertex `{vertex}`: {reason}")]
    IoMismatch { vertex: String, reason: &'static str },
    #[error("feed-forward layers must number at least two and each be non-empty")]
    EmptyLayer,
    #[error("expected {expected} hidden-layer activations, got {got}")]
    ActivationCount { expected: usize, got: usize },
}

/// Raw, unvalidated network description as it appears in a network file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetDescription {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub activations: BTreeMap<String, Activation>,
}

/// Network file contents: either an explicit graph or the layered shorthand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkSpec {
    Layered {
        /// `[n_{l+1}, n_l, …, n_0]`, input layer first.
        layers: Vec<usize>,
        activation: Activation,
    },
    Explicit(NetDescription),
}

impl NetworkSpec {
    pub fn build(&self) -> Result<AcyclicNet, GraphError> {
        match self {
            NetworkSpec::Layered { layers, activation } => feed_forward(layers, &[*activation]),
            NetworkSpec::Explicit(desc) => AcyclicNet::validate(desc),
        }
    }

    pub fn layer_sizes(&self) -> Option<&[usize]> {
        match self {
            NetworkSpec::Layered { layers, .. } => Some(layers),
            NetworkSpec::Explicit(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Input,
    Hidden,
    Output,
}

/// A validated directed acyclic network. Immutable after construction.
#[derive(Debug, Clone)]
pub struct AcyclicNet {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    roles: Vec<Role>,
    activations: Vec<Option<Activation>>,
    topo: Vec<usize>,
}

impl AcyclicNet {
    pub fn validate(desc: &NetDescription) -> Result<Self, GraphError> {
        let mut ids = desc.vertices.clone();
        ids.sort();
        for w in ids.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateVertex(w[0].clone()));
            }
        }
        let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let n = ids.len();

        let mut edges = Vec::with_capacity(desc.edges.len());
        let mut seen = HashSet::new();
        for (s, t) in &desc.edges {
            let source = *index.get(s).ok_or_else(|| GraphError::UnknownVertexInEdge(s.clone()))?;
            let target = *index.get(t).ok_or_else(|| GraphError::UnknownVertexInEdge(t.clone()))?;
            if source == target {
                return Err(GraphError::LoopEdge(s.clone()));
            }
            if !seen.insert((source, target)) {
                return Err(GraphError::ParallelEdge(s.clone(), t.clone()));
            }
            edges.push(Edge { source, target });
        }
        edges.sort_by_key(|e| (e.source, e.target));

        let mut in_edges = vec![Vec::new(); n];
        let mut out_edges = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            out_edges[e.source].push(k);
            in_edges[e.target].push(k);
        }

        let topo = kahn(n, &edges, &in_edges, &out_edges).map_err(|cycle| {
            GraphError::CycleDetected(cycle.into_iter().map(|v| ids[v].clone()).collect())
        })?;

        let lookup = |v: &String| index.get(v).copied().ok_or_else(|| GraphError::UnknownVertex(v.clone()));
        let inputs = desc.inputs.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
        let outputs = desc.outputs.iter().map(lookup).collect::<Result<Vec<_>, _>>()?;

        let mut roles = vec![Role::Hidden; n];
        for &v in &inputs {
            if roles[v] == Role::Input {
                return Err(GraphError::DuplicateVertex(ids[v].clone()));
            }
            roles[v] = Role::Input;
        }
        for &v in &outputs {
            match roles[v] {
                Role::Input => return Err(GraphError::InputOutputOverlap(ids[v].clone())),
                Role::Output => return Err(GraphError::DuplicateVertex(ids[v].clone())),
                Role::Hidden => roles[v] = Role::Output,
            }
        }
        for v in 0..n {
            let no_in = in_edges[v].is_empty();
            let no_out = out_edges[v].is_empty();
            if no_in && no_out {
                return Err(GraphError::InputOutputOverlap(ids[v].clone()));
            }
            let reason = match roles[v] {
                Role::Input if !no_in => Some("input vertex has incoming edges"),
                Role::Output if !no_out => Some("output vertex has outgoing edges"),
                Role::Hidden if no_in => Some("vertex without incoming edges is not listed as an input"),
                Role::Hidden if no_out => Some("vertex without outgoing edges is not listed as an output"),
                _ => None,
            };
            if let Some(reason) = reason {
                return Err(GraphError::IoMismatch { vertex: ids[v].clone(), reason });
            }
        }

        let mut activations = vec![None; n];
        for (v, act) in &desc.activations {
            let i = lookup(v)?;
            if roles[i] != Role::Hidden {
                return Err(GraphError::DanglingActivation {
                    vertex: v.clone(),
                    reason: "input and output vertices carry no activation",
                });
            }
            activations[i] = Some(*act);
        }
        for v in 0..n {
            if roles[v] == Role::Hidden && activations[v].is_none() {
                return Err(GraphError::DanglingActivation {
                    vertex: ids[v].clone(),
                    reason: "hidden vertex has no activation",
                });
            }
        }

        Ok(AcyclicNet { ids, index, edges, in_edges, out_edges, inputs, outputs, roles, activations, topo })
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn vertex(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    /// Position of the edge `source -> target` in the canonical order.
    pub fn edge_index(&self, source: &str, target: &str) -> Option<usize> {
        let key = (self.vertex(source)?, self.vertex(target)?);
        self.edges.binary_search_by_key(&key, |e| (e.source, e.target)).ok()
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn role(&self, v: usize) -> Role {
        self.roles[v]
    }

    pub fn activation(&self, v: usize) -> Option<Activation> {
        self.activations[v]
    }

    /// Deterministic topological order: Kahn's algorithm with ties broken by
    /// vertex id.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn topological_ids(&self) -> Vec<&str> {
        self.topo.iter().map(|&v| self.id(v)).collect()
    }

    /// Largest activation bound over hidden vertices, `None` if any hidden
    /// activation is not uniformly C²-bounded. A net without hidden vertices
    /// reports `Some(0.0)`.
    pub fn activation_bound(&self) -> Option<f64> {
        let mut m: f64 = 0.0;
        for act in self.activations.iter().flatten() {
            m = m.max(act.bound()?);
        }
        Some(m)
    }

    pub fn description(&self) -> NetDescription {
        NetDescription {
            vertices: self.ids.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| (self.ids[e.source].clone(), self.ids[e.target].clone()))
                .collect(),
            inputs: self.inputs.iter().map(|&v| self.ids[v].clone()).collect(),
            outputs: self.outputs.iter().map(|&v| self.ids[v].clone()).collect(),
            activations: self
                .activations
                .iter()
                .enumerate()
                .filter_map(|(v, a)| a.map(|a| (self.ids[v].clone(), a)))
                .collect(),
        }
    }

    pub fn metrics(&self) -> GraphMetrics {
        GraphMetrics::compute(self)
    }
}

/// Kahn's algorithm with a min-heap so the order is reproducible. On failure
/// returns one directed cycle.
fn kahn(n: usize, edges: &[Edge], in_edges: &[Vec<usize>], out_edges: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let mut indeg: Vec<usize> = in_edges.iter().map(Vec::len).collect();
    let mut heap: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| indeg[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = heap.pop() {
        order.push(v);
        for &e in &out_edges[v] {
            let t = edges[e].target;
            indeg[t] -= 1;
            if indeg[t] == 0 {
                heap.push(Reverse(t));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every leftover vertex has a leftover predecessor; walk backwards until a
    // vertex repeats.
    let start = (0..n).find(|&v| indeg[v] > 0).expect("leftover vertex");
    let mut pos = HashMap::new();
    let mut walk = Vec::new();
    let mut v = start;
    while !pos.contains_key(&v) {
        pos.insert(v, walk.len());
        walk.push(v);
        v = in_edges[v]
            .iter()
            .map(|&e| edges[e].source)
            .find(|&s| indeg[s] > 0)
            .expect("leftover vertex has a leftover predecessor");
    }
    let mut cycle = walk[pos[&v]..].to_vec();
    cycle.reverse();
    Err(cycle)
}

/// Depth `d(v)` (longest path ending at v), height `h(v)` (longest path
/// starting at v) and the graph height `H(G)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphMetrics {
    pub depth: Vec<usize>,
    pub height: Vec<usize>,
    pub graph_height: usize,
}

impl GraphMetrics {
    pub fn compute(net: &AcyclicNet) -> Self {
        let n = net.vertex_count();
        let mut depth = vec![0usize; n];
        for &v in net.topological_order() {
            depth[v] = net.in_edges(v).iter().map(|&e| depth[net.edge(e).source] + 1).max().unwrap_or(0);
        }
        let mut height = vec![0usize; n];
        for &v in net.topological_order().iter().rev() {
            height[v] = net.out_edges(v).iter().map(|&e| height[net.edge(e).target] + 1).max().unwrap_or(0);
        }
        let graph_height = depth.iter().copied().max().unwrap_or(0);
        debug_assert_eq!(graph_height, height.iter().copied().max().unwrap_or(0));
        GraphMetrics { depth, height, graph_height }
    }
}

fn digits(n: usize) -> usize {
    n.to_string().len()
}

/// Vertex id for node `j` (1-based) of layer `i`, with the output layer
/// numbered 0 and the input layer `l+1`. Zero padding keeps lexicographic
/// order equal to numeric order.
pub fn layer_vertex_id(i: usize, j: usize, layer_width: usize, node_width: usize) -> String {
    format!("L{i:0layer_width$}_{j:0node_width$}")
}

/// Fully connected feed-forward net. `sizes` lists `[n_{l+1}, …, n_0]`, input
/// layer first. `activations` holds either one activation for every hidden
/// layer or one per hidden layer, top to bottom.
///
/// Edges point from layer `i` to layer `i-1`, so the canonical edge order
/// enumerates `λ^i_{j,j'}` by `i` ascending, then `j`, then `j'`.
pub fn feed_forward(sizes: &[usize], activations: &[Activation]) -> Result<AcyclicNet, GraphError> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(GraphError::EmptyLayer);
    }
    let hidden = sizes.len() - 2;
    let per_layer: Vec<Activation> = match activations.len() {
        1 => vec![activations[0]; hidden],
        k if k == hidden => activations.to_vec(),
        0 if hidden == 0 => Vec::new(),
        got => return Err(GraphError::ActivationCount { expected: hidden, got }),
    };
    let top = sizes.len() - 1;
    let lw = digits(top);
    let nw = digits(*sizes.iter().max().unwrap());
    let id = |i: usize, j: usize| layer_vertex_id(i, j, lw, nw);

    let mut desc = NetDescription {
        vertices: Vec::new(),
        edges: Vec::new(),
        inputs: Vec::new(),
        outputs: Vec::new(),
        activations: BTreeMap::new(),
    };
    for (pos, &size) in sizes.iter().enumerate() {
        let i = top - pos;
        for j in 1..=size {
            let v = id(i, j);
            desc.vertices.push(v.clone());
            if i == top {
                desc.inputs.push(v);
            } else if i == 0 {
                desc.outputs.push(v);
            } else {
                desc.activations.insert(v, per_layer[pos - 1]);
            }
        }
    }
    for pos in 0..top {
        let i = top - pos;
        for j in 1..=sizes[pos] {
            for jp in 1..=sizes[pos + 1] {
                desc.edges.push((id(i, j), id(i - 1, jp)));
            }
        }
    }
    AcyclicNet::validate(&desc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(vertices: &[&str], edges: &[(&str, &str)], inputs: &[&str], outputs: &[&str], acts: &[(&str, Activation)]) -> NetDescription {
        NetDescription {
            vertices: vertices.iter().map(|s| s.to_string()).collect(),
            edges: edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            activations: acts.iter().map(|(v, a)| (v.to_string(), *a)).collect(),
        }
    }

    #[test]
    fn minimal_single_edge() {
        let net = AcyclicNet::validate(&desc(&["a", "b"], &[("a", "b")], &["a"], &["b"], &[])).unwrap();
        assert_eq!(net.edge_count(), 1);
        assert_eq!(net.metrics().graph_height, 1);
    }

    #[test]
    fn two_cycle_is_detected() {
        let err = AcyclicNet::validate(&desc(&["a", "b"], &[("a", "b"), ("b", "a")], &[], &[], &[])).unwrap_err();
        match err {
            GraphError::CycleDetected(c) => {
                assert_eq!(c.len(), 2);
                assert!(c.contains(&"a".to_string()) && c.contains(&"b".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn longer_cycle_is_named_in_edge_order() {
        let d = desc(
            &["a", "b", "c", "d", "x"],
            &[("x", "a"), ("a", "b"), ("b", "c"), ("c", "a"), ("c", "d")],
            &["x"],
            &["d"],
            &[],
        );
        let GraphError::CycleDetected(c) = AcyclicNet::validate(&d).unwrap_err() else { panic!() };
        assert_eq!(c.len(), 3);
        // consecutive entries are joined by edges, closing back to the start
        for i in 0..c.len() {
            let (s, t) = (&c[i], &c[(i + 1) % c.len()]);
            assert!(d.edges.contains(&(s.clone(), t.clone())), "{s}->{t} not an edge");
        }
    }

    #[test]
    fn triangle_with_shortcut_is_valid() {
        let net = AcyclicNet::validate(&desc(
            &["a", "b", "c"],
            &[("a", "b"), ("b", "c"), ("a", "c")],
            &["a"],
            &["c"],
            &[("b", Activation::Tanh)],
        ))
        .unwrap();
        assert_eq!(net.topological_ids(), ["a", "b", "c"]);
    }

    #[test]
    fn structural_errors() {
        let e = AcyclicNet::validate(&desc(&["a", "b"], &[("a", "a")], &["a"], &["b"], &[])).unwrap_err();
        assert_eq!(e, GraphError::LoopEdge("a".into()));
        let e = AcyclicNet::validate(&desc(&["a", "b"], &[("a", "b"), ("a", "b")], &["a"], &["b"], &[])).unwrap_err();
        assert_eq!(e, GraphError::ParallelEdge("a".into(), "b".into()));
        let e = AcyclicNet::validate(&desc(&["a", "b"], &[("a", "q")], &["a"], &["b"], &[])).unwrap_err();
        assert_eq!(e, GraphError::UnknownVertexInEdge("q".into()));
        let e = AcyclicNet::validate(&desc(&["a", "b"], &[("a", "b")], &["a"], &["a", "b"], &[])).unwrap_err();
        assert_eq!(e, GraphError::InputOutputOverlap("a".into()));
        let e = AcyclicNet::validate(&desc(&["a", "b"], &[("a", "b")], &["a"], &["b"], &[("b", Activation::Tanh)])).unwrap_err();
        assert!(matches!(e, GraphError::DanglingActivation { .. }));
        let e = AcyclicNet::validate(&desc(&["a", "h", "b"], &[("a", "h"), ("h", "b")], &["a"], &["b"], &[])).unwrap_err();
        assert!(matches!(e, GraphError::DanglingActivation { .. }));
        let e = AcyclicNet::validate(&desc(&["a", "h", "b"], &[("a", "h"), ("h", "b")], &["a", "h"], &["b"], &[])).unwrap_err();
        assert!(matches!(e, GraphError::IoMismatch { .. }));
    }

    #[test]
    fn chain_metrics() {
        let net = AcyclicNet::validate(&desc(&["a", "b", "c"], &[("a", "b"), ("b", "c")], &["a"], &["c"], &[("b", Activation::Tanh)])).unwrap();
        let m = net.metrics();
        assert_eq!(m.depth, vec![0, 1, 2]);
        assert_eq!(m.height, vec![2, 1, 0]);
        assert_eq!(m.graph_height, 2);
    }

    #[test]
    fn diamond_with_shortcut() {
        let net = AcyclicNet::validate(&desc(
            &["d", "c", "b", "a"],
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"), ("a", "d")],
            &["a"],
            &["d"],
            &[("b", Activation::Tanh), ("c", Activation::Logistic)],
        ))
        .unwrap();
        let m = net.metrics();
        assert_eq!(m.depth[net.vertex("d").unwrap()], 2);
        assert_eq!(m.height[net.vertex("a").unwrap()], 2);
        assert_eq!(m.graph_height, 2);
        assert_eq!(net.topological_ids(), ["a", "b", "c", "d"]);
    }

    #[test]
    fn canonical_edge_order_is_lexicographic() {
        let net = AcyclicNet::validate(&desc(
            &["a", "b", "c", "d"],
            &[("c", "d"), ("a", "d"), ("b", "d"), ("a", "b"), ("a", "c")],
            &["a"],
            &["d"],
            &[("b", Activation::Tanh), ("c", Activation::Tanh)],
        ))
        .unwrap();
        let labels: Vec<_> = net.description().edges;
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(labels, sorted);
        assert_eq!(net.edge_index("a", "c"), Some(1));
    }

    #[test]
    fn feed_forward_shapes() {
        let net = feed_forward(&[1, 1], &[]).unwrap();
        assert_eq!((net.edge_count(), net.metrics().graph_height), (1, 1));
        let net = feed_forward(&[2, 3, 1], &[Activation::Tanh]).unwrap();
        assert_eq!((net.edge_count(), net.metrics().graph_height), (9, 2));
        let net = feed_forward(&[4, 5, 5, 2], &[Activation::Tanh]).unwrap();
        assert_eq!((net.edge_count(), net.metrics().graph_height), (55, 3));
        assert_eq!(net.vertex_count(), 16);
        assert_eq!(feed_forward(&[3, 0, 1], &[Activation::Tanh]).unwrap_err(), GraphError::EmptyLayer);
        assert_eq!(feed_forward(&[3], &[]).unwrap_err(), GraphError::EmptyLayer);
    }

    #[test]
    fn feed_forward_depth_matches_layer_index() {
        let sizes = [3, 4, 2, 5, 1];
        let net = feed_forward(&sizes, &[Activation::Tanh, Activation::Logistic, Activation::Gaussian]).unwrap();
        let m = net.metrics();
        let top = sizes.len() - 1;
        for v in 0..net.vertex_count() {
            let layer: usize = net.id(v)[1..2].parse().unwrap();
            assert_eq!(m.depth[v], top - layer);
            assert_eq!(m.height[v], layer);
        }
        // first edge is λ^1_{1,1}: layer 1 node 1 to output node 1
        assert_eq!(net.description().edges[0], ("L1_1".to_string(), "L0_1".to_string()));
    }

    #[test]
    fn network_spec_parses_both_forms() {
        let layered: NetworkSpec = serde_json::from_str(r#"{"layers":[2,3,1],"activation":"tanh"}"#).unwrap();
        assert_eq!(layered.build().unwrap().edge_count(), 9);
        let explicit: NetworkSpec = serde_json::from_str(
            r#"{"vertices":["x","h","z"],"edges":[["x","h"],["h","z"]],"inputs":["x"],"outputs":["z"],"activations":{"h":"tanh"}}"#,
        )
        .unwrap();
        assert_eq!(explicit.build().unwrap().metrics().graph_height, 2);
    }
}
