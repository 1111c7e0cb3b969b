//! Label-setting shortest paths shared by every metric in the crate.
//!
//! Weights are indexed by edge id and may be `+inf`; an infinite edge never
//! relaxes anything, so it behaves as an absorbing value rather than a
//! removed edge. Heap order is `(distance, vertex id)`, and on exact ties the
//! predecessor with the smaller vertex id wins, so results never depend on
//! hash or insertion order.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::graph::MetricGraph;

#[derive(Debug, Clone, Copy)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dense single/multi-source result.
#[derive(Debug, Clone)]
pub(crate) struct ShortestPaths {
    pub dist: Vec<f64>,
    pub parent: Vec<Option<usize>>,
    pub parent_edge: Vec<Option<usize>>,
}

/// Multi-source Dijkstra. `sources` holds `(vertex, initial value)`; a vertex
/// listed twice keeps its smallest initial value. Vertices farther than
/// `cutoff` keep `+inf`.
pub(crate) fn dijkstra(
    graph: &MetricGraph,
    weights: &[f64],
    sources: &[(usize, f64)],
    cutoff: f64,
) -> ShortestPaths {
    let n = graph.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut parent_edge = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();

    for &(s, init) in sources {
        if init < dist[s] {
            dist[s] = init;
        }
    }
    for &(s, _) in sources {
        if dist[s].is_finite() && dist[s] <= cutoff {
            heap.push(Entry {
                dist: dist[s],
                vertex: s,
            });
        }
    }

    while let Some(Entry { dist: d, vertex }) = heap.pop() {
        if settled[vertex] || d > dist[vertex] {
            continue;
        }
        settled[vertex] = true;
        for &(next, edge) in graph.neighbors(vertex) {
            if settled[next] {
                continue;
            }
            let nd = d + weights[edge];
            if nd > cutoff {
                continue;
            }
            let better = nd < dist[next]
                || (nd == dist[next] && parent[next].is_some_and(|p| vertex < p));
            if better {
                let improved = nd < dist[next];
                dist[next] = nd;
                parent[next] = Some(vertex);
                parent_edge[next] = Some(edge);
                if improved {
                    heap.push(Entry {
                        dist: nd,
                        vertex: next,
                    });
                }
            }
        }
    }

    ShortestPaths {
        dist,
        parent,
        parent_edge,
    }
}

/// Sparse variant for small balls on large graphs: returns every vertex with
/// distance `<= cutoff` from `source`, sorted by vertex id.
pub(crate) fn ball(
    graph: &MetricGraph,
    weights: &[f64],
    source: usize,
    cutoff: f64,
) -> Vec<(usize, f64)> {
    let mut dist: HashMap<usize, f64> = HashMap::new();
    let mut done: HashMap<usize, f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(source, 0.0);
    heap.push(Entry {
        dist: 0.0,
        vertex: source,
    });
    while let Some(Entry { dist: d, vertex }) = heap.pop() {
        if done.contains_key(&vertex) {
            continue;
        }
        done.insert(vertex, d);
        for &(next, edge) in graph.neighbors(vertex) {
            if done.contains_key(&next) {
                continue;
            }
            let nd = d + weights[edge];
            if nd > cutoff {
                continue;
            }
            let entry = dist.entry(next).or_insert(f64::INFINITY);
            if nd < *entry {
                *entry = nd;
                heap.push(Entry {
                    dist: nd,
                    vertex: next,
                });
            }
        }
    }
    let mut out: Vec<(usize, f64)> = done.into_iter().collect();
    out.sort_unstable_by_key(|&(v, _)| v);
    out
}

/// Two-sweep lower estimate of the diameter over finite distances.
pub(crate) fn diameter_estimate(graph: &MetricGraph, weights: &[f64]) -> f64 {
    let first = dijkstra(graph, weights, &[(0, 0.0)], f64::INFINITY);
    let far = farthest(&first.dist);
    let second = dijkstra(graph, weights, &[(far, 0.0)], f64::INFINITY);
    second
        .dist
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max)
}

fn farthest(dist: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::NEG_INFINITY;
    for (v, &d) in dist.iter().enumerate() {
        if d.is_finite() && d > best_d {
            best = v;
            best_d = d;
        }
    }
    best
}
