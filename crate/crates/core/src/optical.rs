//! Optical length `L_f`: shortest paths under edge weights `int_e f ds`.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{EdgeRef, WeightField};
use crate::graph::{MetricGraph, Path, VertexId};
use crate::quadrature::Quadrature;
use crate::search;

/// Weight of every edge: `int_e f ds`, in `[alpha * length, +inf]`.
pub fn edge_weights(graph: &MetricGraph, f: &WeightField, quad: &Quadrature) -> Vec<f64> {
    (0..graph.edge_count())
        .into_par_iter()
        .map(|id| {
            let e = EdgeRef::of(graph, id);
            quad.edge_integral(f, &e, 0.0, e.length)
        })
        .collect()
}

/// A graph paired with one set of edge weights.
#[derive(Debug, Clone)]
pub struct WeightedGraph<'g> {
    graph: &'g MetricGraph,
    weights: Vec<f64>,
    alpha: f64,
    meta: TableMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableMeta {
    pub quadrature: Option<Quadrature>,
    pub truncation: Option<f64>,
}

impl<'g> WeightedGraph<'g> {
    pub fn new(graph: &'g MetricGraph, f: &WeightField, quad: &Quadrature) -> Self {
        WeightedGraph {
            graph,
            weights: edge_weights(graph, f, quad),
            alpha: f.alpha(),
            meta: TableMeta {
                quadrature: Some(*quad),
                truncation: None,
            },
        }
    }

    /// Explicit weights; `alpha` is the smallest ratio weight/length.
    pub fn from_weights(graph: &'g MetricGraph, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != graph.edge_count() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} edges",
                weights.len(),
                graph.edge_count()
            )));
        }
        if let Some(id) = weights.iter().position(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "edge {id} has non-positive weight {}",
                weights[id]
            )));
        }
        let alpha = weights
            .iter()
            .zip(graph.edges())
            .map(|(w, e)| w / e.length)
            .fold(f64::INFINITY, f64::min);
        Ok(WeightedGraph {
            graph,
            weights,
            alpha,
            meta: TableMeta {
                quadrature: None,
                truncation: None,
            },
        })
    }

    pub fn graph(&self) -> &'g MetricGraph {
        self.graph
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn meta(&self) -> TableMeta {
        self.meta
    }

    pub(crate) fn with_weights(&self, weights: Vec<f64>) -> WeightedGraph<'g> {
        WeightedGraph {
            graph: self.graph,
            weights,
            alpha: self.alpha,
            meta: self.meta,
        }
    }

    /// `dist(v) = min_s (initial(s) + L_f(s, v))`.
    pub fn from_sources(
        &self,
        sources: &[VertexId],
        initial: Option<&[f64]>,
    ) -> Result<OpticalTable> {
        if sources.is_empty() {
            return Err(Error::EmptySourceSet);
        }
        if let Some(init) = initial {
            if init.len() != sources.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} initial values for {} sources",
                    init.len(),
                    sources.len()
                )));
            }
        }
        let mut seeds = Vec::with_capacity(sources.len());
        for (k, &s) in sources.iter().enumerate() {
            if s >= self.graph.vertex_count() {
                return Err(Error::UnknownVertex(s));
            }
            seeds.push((s, initial.map_or(0.0, |i| i[k])));
        }
        let sp = search::dijkstra(self.graph, &self.weights, &seeds, f64::INFINITY);
        Ok(OpticalTable {
            sources: sources.to_vec(),
            dist: sp.dist,
            parent: sp.parent,
            parent_edge: sp.parent_edge,
            meta: self.meta,
        })
    }

    /// `L_f(x, .)` for every vertex.
    pub fn distances_from(&self, x: VertexId) -> Vec<f64> {
        search::dijkstra(self.graph, &self.weights, &[(x, 0.0)], f64::INFINITY).dist
    }

    /// Vertices `y` with `L_f(x, y) <= radius`, including `x` itself.
    pub fn ball(&self, x: VertexId, radius: f64) -> Vec<(VertexId, f64)> {
        search::ball(self.graph, &self.weights, x, radius)
    }

    /// `L_f(x, y)` with a witness path; `(+inf, empty)` when no finite path
    /// exists.
    pub fn pair(&self, x: VertexId, y: VertexId) -> Result<(f64, Path)> {
        let table = self.from_sources(&[x], None)?;
        if y >= self.graph.vertex_count() {
            return Err(Error::UnknownVertex(y));
        }
        let value = table.dist[y];
        if !value.is_finite() {
            return Ok((f64::INFINITY, Path::empty()));
        }
        Ok((value, table.witness(self.graph, y)))
    }

    /// Two-sweep estimate of the optical diameter over finite distances.
    pub fn diameter_estimate(&self) -> f64 {
        search::diameter_estimate(self.graph, &self.weights)
    }

    /// `max |w(a) - w(b)| - weight(e)` over edges, for a vertex function `u`.
    /// Nonpositive exactly when `u` is 1-Lipschitz in `L_f` along every edge,
    /// which in turn gives `u(x) <= u(y) + L_f(x, y)` for all pairs.
    pub fn lipschitz_excess(&self, u: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (id, e) in self.graph.edges().iter().enumerate() {
            let w = self.weights[id];
            let (a, b) = (u[e.u], u[e.v]);
            if !w.is_finite() || !a.is_finite() || !b.is_finite() {
                continue;
            }
            worst = worst.max((a - b).abs() - w);
        }
        worst
    }
}

/// Distances from a source set with the witness shortest-path tree.
#[derive(Debug, Clone)]
pub struct OpticalTable {
    pub sources: Vec<VertexId>,
    pub dist: Vec<f64>,
    pub parent: Vec<Option<VertexId>>,
    pub parent_edge: Vec<Option<usize>>,
    pub meta: TableMeta,
}

impl OpticalTable {
    /// Path from the source reaching `v` to `v`.
    pub fn witness(&self, graph: &MetricGraph, v: VertexId) -> Path {
        let mut edges = Vec::new();
        let mut at = v;
        while let Some(e) = self.parent_edge[at] {
            edges.push(e);
            at = self.parent[at].expect("parent edge without parent vertex");
        }
        edges.reverse();
        Path::from_edges(graph, at, &edges).expect("witness tree is consistent")
    }

    /// CSV with columns `vertex_id,x,y,dist,parent_id`.
    pub fn write_csv<W: Write>(&self, graph: &MetricGraph, mut out: W) -> std::io::Result<()> {
        writeln!(out, "vertex_id,x,y,dist,parent_id")?;
        for (v, vert) in graph.vertices().iter().enumerate() {
            let parent = self.parent[v]
                .map(|p| graph.vertex(p).label.clone())
                .unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                vert.label, vert.coords[0], vert.coords[1], self.dist[v], parent
            )?;
        }
        Ok(())
    }
}

pub fn optical_from_sources(
    graph: &MetricGraph,
    f: &WeightField,
    sources: &[VertexId],
    initial: Option<&[f64]>,
    quad: &Quadrature,
) -> Result<OpticalTable> {
    WeightedGraph::new(graph, f, quad).from_sources(sources, initial)
}

pub fn optical_pair(
    graph: &MetricGraph,
    f: &WeightField,
    x: VertexId,
    y: VertexId,
    quad: &Quadrature,
) -> Result<(f64, Path)> {
    WeightedGraph::new(graph, f, quad).pair(x, y)
}

/// Same as [`optical_from_sources`] with `f` replaced by `min(f, m)`.
pub fn truncated_solve(
    graph: &MetricGraph,
    f: &WeightField,
    m: f64,
    sources: &[VertexId],
    initial: Option<&[f64]>,
    quad: &Quadrature,
) -> Result<OpticalTable> {
    if !(m > f.alpha()) {
        return Err(Error::InvalidParameter(format!(
            "truncation level {m} must exceed alpha {}",
            f.alpha()
        )));
    }
    let mut wg = WeightedGraph::new(graph, &f.truncated(m), quad);
    wg.meta.truncation = (m != f64::INFINITY).then_some(m);
    wg.from_sources(sources, initial)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Nonnegativity,
    Identity,
    Symmetry,
    Triangle,
    LowerLipschitz,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub vertices: Vec<VertexId>,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub triples: usize,
    pub violations: Vec<AxiomViolation>,
}

impl MetricReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative slack for comparisons between sums accumulated in different
/// orders (e.g. `L(x, y)` from `x` versus from `y`).
pub const ROUNDING_SLACK: f64 = 1e-12;

/// Checks the metric axioms of `L_f` and `L_f >= alpha d_G` on random
/// triples of vertices.
pub fn check_metric_axioms(wg: &WeightedGraph<'_>, sample_count: usize, seed: u64) -> MetricReport {
    let graph = wg.graph();
    let n = graph.vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<[usize; 3]> = (0..sample_count)
        .map(|_| [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)])
        .collect();
    let mut optical: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut metric: HashMap<usize, Vec<f64>> = HashMap::new();
    for t in &triples {
        for &v in &t[..2] {
            optical.entry(v).or_insert_with(|| wg.distances_from(v));
            metric.entry(v).or_insert_with(|| graph.distances_from(v));
        }
    }
    let close = |a: f64, b: f64| -> bool {
        a == b || (a - b).abs() <= ROUNDING_SLACK * a.abs().max(b.abs())
    };
    let mut violations = Vec::new();
    for &[x, y, z] in &triples {
        let lx = &optical[&x];
        let ly = &optical[&y];
        if lx[x] != 0.0 {
            violations.push(AxiomViolation {
                axiom: Axiom::Identity,
                vertices: vec![x],
                amount: lx[x],
            });
        }
        for (a, b, v) in [(x, y, lx[y]), (x, z, lx[z]), (y, z, ly[z])] {
            if v < 0.0 {
                violations.push(AxiomViolation {
                    axiom: Axiom::Nonnegativity,
                    vertices: vec![a, b],
                    amount: v,
                });
            }
            if a != b && v == 0.0 {
                violations.push(AxiomViolation {
                    axiom: Axiom::Identity,
                    vertices: vec![a, b],
                    amount: 0.0,
                });
            }
            let d = metric[&a][b];
            let bound = wg.alpha() * d;
            if v < bound && !close(v, bound) {
                violations.push(AxiomViolation {
                    axiom: Axiom::LowerLipschitz,
                    vertices: vec![a, b],
                    amount: bound - v,
                });
            }
        }
        if !close(lx[y], ly[x]) {
            violations.push(AxiomViolation {
                axiom: Axiom::Symmetry,
                vertices: vec![x, y],
                amount: (lx[y] - ly[x]).abs(),
            });
        }
        let via = lx[y] + ly[z];
        if lx[z] > via && !close(lx[z], via) {
            violations.push(AxiomViolation {
                axiom: Axiom::Triangle,
                vertices: vec![x, y, z],
                amount: lx[z] - via,
            });
        }
    }
    MetricReport {
        triples: triples.len(),
        violations,
    }
}

/// How [`topology_modulus`] enumerates pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusBudget {
    /// All pairs are examined up to this many vertices.
    pub all_pairs_limit: usize,
    /// Number of random source vertices used above the limit.
    pub sample_sources: Option<usize>,
    pub seed: u64,
}

impl Default for ModulusBudget {
    fn default() -> Self {
        ModulusBudget {
            all_pairs_limit: 5000,
            sample_sources: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyModulus {
    pub radii: Vec<f64>,
    /// `sup { L_f(x, y) : d_G(x, y) <= r }`.
    pub modulus: Vec<f64>,
    /// Same supremum restricted to the boundary collar `d_G(., boundary) <= r`;
    /// absent when the graph has no boundary flags.
    pub collar: Option<Vec<f64>>,
    pub all_pairs: bool,
    pub sources_examined: usize,
}

impl TopologyModulus {
    /// Crude reading of "modulus tends to zero": the value at the smallest
    /// radius is below `fraction` of the value at the largest.
    pub fn vanishes(&self, fraction: f64) -> bool {
        match (self.modulus.first(), self.modulus.last()) {
            (Some(&big), Some(&small)) => small.is_finite() && small <= fraction * big,
            _ => false,
        }
    }
}

pub fn topology_modulus(
    wg: &WeightedGraph<'_>,
    radii: &[f64],
    budget: &ModulusBudget,
) -> Result<TopologyModulus> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    let graph = wg.graph();
    let n = graph.vertex_count();
    let (sources, all_pairs): (Vec<usize>, bool) = if n <= budget.all_pairs_limit {
        ((0..n).collect(), true)
    } else {
        let k = budget.sample_sources.ok_or(Error::BudgetExceeded {
            vertices: n,
            limit: budget.all_pairs_limit,
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        let mut picked: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
        picked.sort_unstable();
        picked.dedup();
        (picked, false)
    };

    let boundary = graph.boundary_vertices();
    let to_boundary = (!boundary.is_empty()).then(|| graph.distances_to_set(&boundary));
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let lengths = graph.lengths();

    let partials: Vec<(Vec<f64>, Vec<f64>)> = sources
        .par_iter()
        .map(|&x| {
            let d = search::dijkstra(graph, &lengths, &[(x, 0.0)], rmax).dist;
            let l = wg.distances_from(x);
            let mut m = vec![0.0f64; radii.len()];
            let mut c = vec![0.0f64; radii.len()];
            for y in 0..n {
                if y == x || !d[y].is_finite() {
                    continue;
                }
                for (k, &r) in radii.iter().enumerate() {
                    if d[y] <= r {
                        m[k] = m[k].max(l[y]);
                        if let Some(tb) = &to_boundary {
                            if tb[x] <= r && tb[y] <= r {
                                c[k] = c[k].max(l[y]);
                            }
                        }
                    }
                }
            }
            (m, c)
        })
        .collect();

    let mut modulus = vec![0.0f64; radii.len()];
    let mut collar = vec![0.0f64; radii.len()];
    for (m, c) in partials {
        for k in 0..radii.len() {
            modulus[k] = modulus[k].max(m[k]);
            collar[k] = collar[k].max(c[k]);
        }
    }
    Ok(TopologyModulus {
        radii: radii.to_vec(),
        modulus,
        collar: to_boundary.map(|_| collar),
        all_pairs,
        sources_examined: sources.len(),
    })
}
