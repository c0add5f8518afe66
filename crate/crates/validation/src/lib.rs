//! Acceptance checks for the `augsgd` workspace. The checks themselves live in
//! `tests/acceptance.rs`; this crate holds the record type and the oracles
//! they share.

use std::fmt;
use std::time::{Duration, Instant};

use augsgd_core::graph::AcyclicNet;

/// Result of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{}] {}: {} ({:.2} s)", self.id, self.name, self.detail, self.elapsed.as_secs_f64())
    }
}

/// Runs `check` and times it. The closure returns the verdict and a one-line
/// detail.
pub fn criterion<F>(id: u8, name: &'static str, check: F) -> Outcome
where
    F: FnOnce() -> (bool, String),
{
    let start = Instant::now();
    let (passed, detail) = check();
    Outcome { id, name, passed, detail, elapsed: start.elapsed() }
}

/// Longest path lengths ending at / starting from every vertex, by
/// enumerating every directed path.
pub fn enumerate_depth_height(net: &AcyclicNet) -> (Vec<usize>, Vec<usize>) {
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

/// Median of a slice; `NaN` when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_small_sets() {
        assert!(median(&[]).is_nan());
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn display_marks_verdict() {
        let o = criterion(7, "constants", || (false, "off".into()));
        assert!(o.to_string().starts_with("FAIL [7] constants: off"));
    }
}
