//! Random small graphs and an exhaustive path oracle.
#![allow(dead_code)]

use eikonal_core::graph::{build_graph, GraphSpec, MetricGraph};
use eikonal_core::WeightField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Case {
    pub graph: MetricGraph,
    /// Constant value of f on each edge, in [1, 5].
    pub f: Vec<f64>,
}

impl Case {
    pub fn field(&self) -> WeightField {
        WeightField::per_edge(self.f.clone()).unwrap()
    }
}

/// Connected graph with 2..=max_n vertices, random lengths in [0.1, 1], at
/// least one boundary and one interior vertex.
pub fn random_case(seed: u64, max_n: usize) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_n);
    let mut spec = GraphSpec {
        name: format!("random {seed}"),
        dim: 2,
        ..GraphSpec::default()
    };
    let interior = rng.gen_range(0..n);
    let forced = (interior + 1 + rng.gen_range(0..n - 1)) % n;
    for v in 0..n {
        let boundary = v == forced || (v != interior && rng.gen_bool(0.4));
        spec.vertex(v.to_string(), &[rng.gen(), rng.gen()], boundary);
    }
    for v in 1..n {
        let u = rng.gen_range(0..v);
        spec.edge_with_length(u, v, rng.gen_range(0.1..1.0));
    }
    for a in 0..n {
        for b in a + 1..n {
            let present = spec.edges.iter().any(|e| (e.u, e.v) == (a, b) || (e.u, e.v) == (b, a));
            if !present && rng.gen_bool(0.3) {
                spec.edge_with_length(a, b, rng.gen_range(0.1..1.0));
            }
        }
    }
    let f = (0..spec.edges.len()).map(|_| rng.gen_range(1.0..5.0)).collect();
    Case {
        graph: build_graph(&spec).unwrap(),
        f,
    }
}

/// Minimum over all simple paths of `init[s] + sum of weights`, summed in
/// path order from the source.
pub fn brute_force(graph: &MetricGraph, weights: &[f64], sources: &[(usize, f64)]) -> Vec<f64> {
    let n = graph.vertex_count();
    let mut best = vec![f64::INFINITY; n];
    let mut on_path = vec![false; n];
    fn walk(
        graph: &MetricGraph,
        weights: &[f64],
        v: usize,
        acc: f64,
        on_path: &mut [bool],
        best: &mut [f64],
    ) {
        if acc < best[v] {
            best[v] = acc;
        }
        on_path[v] = true;
        for &(w, e) in graph.neighbors(v) {
            if !on_path[w] {
                walk(graph, weights, w, acc + weights[e], on_path, best);
            }
        }
        on_path[v] = false;
    }
    for &(s, g) in sources {
        walk(graph, weights, s, g, &mut on_path, &mut best);
    }
    best
}

/// Relative-or-absolute closeness.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
