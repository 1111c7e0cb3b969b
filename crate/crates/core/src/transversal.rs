//! Null-set markings, transversal optical length `L_f^N`, its maximum over a
//! finite family, and the maximal solution `u~`.
//!
//! A marking blocks a set of edges (weight `+inf`). The endpoints of blocked
//! edges lie in the null set; unless listed as passable they cannot be
//! crossed either, so every edge incident to them is blocked as well. Passable
//! vertices keep their unblocked edges.
//!
//! The family is always evaluated together with the empty marking, and the
//! maximum over a finite family is only a lower bound for the supremum over
//! all null sets.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{finish, lax_values, DirichletProblem, Solution};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, VertexId};
use crate::monge::{check_decreasing, monge_targets, verify_with, weak_solution_check, MongeReport, WeakMode, WeakReport};
use crate::optical::{OpticalTable, WeightedGraph};
use crate::search;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullSetMarking {
    pub name: String,
    pub blocked_edges: BTreeSet<EdgeId>,
    pub passable_vertices: BTreeSet<VertexId>,
}

impl NullSetMarking {
    pub fn new(
        name: impl Into<String>,
        blocked_edges: impl IntoIterator<Item = EdgeId>,
        passable_vertices: impl IntoIterator<Item = VertexId>,
    ) -> Self {
        NullSetMarking {
            name: name.into(),
            blocked_edges: blocked_edges.into_iter().collect(),
            passable_vertices: passable_vertices.into_iter().collect(),
        }
    }

    pub fn validate(&self, graph: &MetricGraph) -> Result<()> {
        if let Some(&e) = self.blocked_edges.iter().find(|&&e| e >= graph.edge_count()) {
            return Err(Error::InvalidEdge {
                edge: e,
                reason: format!("marking {} blocks an unknown edge", self.name),
            });
        }
        if let Some(&v) = self.passable_vertices.iter().find(|&&v| v >= graph.vertex_count()) {
            return Err(Error::UnknownVertex(v));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.blocked_edges.is_empty()
    }

    /// Vertices of the null set: endpoints of blocked edges.
    pub fn vertices(&self, graph: &MetricGraph) -> BTreeSet<VertexId> {
        self.blocked_edges
            .iter()
            .flat_map(|&e| {
                let edge = graph.edge(e);
                [edge.u, edge.v]
            })
            .collect()
    }

    /// Null-set vertices that may not be crossed.
    pub fn impassable(&self, graph: &MetricGraph) -> BTreeSet<VertexId> {
        self.vertices(graph)
            .into_iter()
            .filter(|v| !self.passable_vertices.contains(v))
            .collect()
    }

    /// Whether `v` lies in the null set.
    pub fn touches(&self, graph: &MetricGraph, v: VertexId) -> bool {
        graph
            .neighbors(v)
            .iter()
            .any(|(_, e)| self.blocked_edges.contains(e))
    }

    /// `base` with blocked and impassable edges set to `+inf`.
    pub fn apply(&self, graph: &MetricGraph, base: &[f64]) -> Vec<f64> {
        let mut w = base.to_vec();
        for &e in &self.blocked_edges {
            w[e] = f64::INFINITY;
        }
        for v in self.impassable(graph) {
            for &(_, e) in graph.neighbors(v) {
                w[e] = f64::INFINITY;
            }
        }
        w
    }

    /// Marking whose blocked set is the union and whose passable vertices are
    /// those impassable in no member.
    pub fn union<'a>(graph: &MetricGraph, family: impl IntoIterator<Item = &'a NullSetMarking>) -> NullSetMarking {
        let mut blocked = BTreeSet::new();
        let mut impassable = BTreeSet::new();
        let mut names = Vec::new();
        for m in family {
            blocked.extend(m.blocked_edges.iter().copied());
            impassable.extend(m.impassable(graph));
            names.push(m.name.clone());
        }
        let mut out = NullSetMarking {
            name: names.join("+"),
            blocked_edges: blocked,
            passable_vertices: BTreeSet::new(),
        };
        out.passable_vertices = out
            .vertices(graph)
            .into_iter()
            .filter(|v| !impassable.contains(v))
            .collect();
        out
    }
}

fn validate_family(graph: &MetricGraph, family: &[NullSetMarking]) -> Result<()> {
    family.iter().try_for_each(|m| m.validate(graph))
}

/// Weight vectors for the empty marking followed by each family member.
fn family_weights(wg: &WeightedGraph<'_>, family: &[NullSetMarking]) -> Vec<Vec<f64>> {
    let mut out = vec![wg.weights().to_vec()];
    out.extend(family.iter().map(|m| m.apply(wg.graph(), wg.weights())));
    out
}

/// `L_f^N` from a source set.
pub fn optical_transversal(
    wg: &WeightedGraph<'_>,
    marking: &NullSetMarking,
    sources: &[VertexId],
    initial: Option<&[f64]>,
) -> Result<OpticalTable> {
    marking.validate(wg.graph())?;
    wg.with_weights(marking.apply(wg.graph(), wg.weights()))
        .from_sources(sources, initial)
}

/// `max_N L_f^N(x, y)` over the empty marking and `family`. The second value
/// is the index into `family` of the maximizer, `None` for the empty marking;
/// ties keep the earliest.
pub fn maximal_optical(
    wg: &WeightedGraph<'_>,
    family: &[NullSetMarking],
    x: VertexId,
    y: VertexId,
) -> Result<(f64, Option<usize>)> {
    validate_family(wg.graph(), family)?;
    let n = wg.graph().vertex_count();
    if x >= n {
        return Err(Error::UnknownVertex(x));
    }
    if y >= n {
        return Err(Error::UnknownVertex(y));
    }
    let mut best = (wg.distances_from(x)[y], None);
    for (k, m) in family.iter().enumerate() {
        let w = m.apply(wg.graph(), wg.weights());
        let d = search::dijkstra(wg.graph(), &w, &[(x, 0.0)], f64::INFINITY).dist[y];
        if d > best.0 {
            best = (d, Some(k));
        }
    }
    Ok(best)
}

/// How `u~` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransversalMethod {
    /// Empty family: the plain Lax solve.
    Plain,
    /// One marking: `L_f^N >= L_f` edgewise, so a single multi-source solve
    /// with the marked weights is exact.
    SingleMarking,
    /// `min_y (g(y) + max_N L_f^N(x, y))` from one distance table per marking
    /// and boundary vertex.
    PerBoundaryVertex,
    /// Vertexwise max of per-marking solves; a lower bound for `u~`.
    VertexwiseMax,
}

impl TransversalMethod {
    pub fn exact(self) -> bool {
        !matches!(self, TransversalMethod::VertexwiseMax)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalSolution {
    /// `u~` with its effective boundary and diagnostics.
    pub solution: Solution,
    /// Plain Lax solution `u` of the same problem.
    pub u: Vec<f64>,
    pub method: TransversalMethod,
    /// `max |u~ - u|` over vertices where `u~` is finite.
    pub gap: f64,
    /// Vertices where `u~ = +inf` (typically the null set itself).
    pub unreachable: usize,
}

/// Table budget (`markings * boundary vertices * vertices`) for the exact
/// per-boundary-vertex evaluation.
pub const EXACT_BUDGET: usize = 50_000_000;

/// `u~(x) = min_y (g(y) + max_N L_f^N(x, y))`.
pub fn solve_lax_transversal(
    problem: &DirichletProblem<'_>,
    wg: &WeightedGraph<'_>,
    family: &[NullSetMarking],
) -> Result<TransversalSolution> {
    let graph = wg.graph();
    validate_family(graph, family)?;
    let u = lax_values(problem, wg)?;
    let weights = family_weights(wg, family);
    let sources: Vec<VertexId> = problem.boundary().keys().copied().collect();
    let initial: Vec<f64> = problem.boundary().values().copied().collect();

    let work = weights.len() * sources.len() * graph.vertex_count();
    let (utilde, method) = if family.is_empty() {
        (u.clone(), TransversalMethod::Plain)
    } else if family.len() == 1 {
        let t = wg.with_weights(weights[1].clone()).from_sources(&sources, Some(&initial))?;
        (t.dist, TransversalMethod::SingleMarking)
    } else if work <= EXACT_BUDGET {
        let n = graph.vertex_count();
        let out = problem
            .boundary()
            .par_iter()
            .map(|(&y, &gy)| {
                let mut worst = vec![f64::NEG_INFINITY; n];
                for w in &weights {
                    let d = search::dijkstra(graph, w, &[(y, 0.0)], f64::INFINITY).dist;
                    for (a, b) in worst.iter_mut().zip(d) {
                        *a = a.max(b);
                    }
                }
                worst.into_iter().map(|l| gy + l).collect::<Vec<f64>>()
            })
            .reduce(
                || vec![f64::INFINITY; n],
                |a, b| a.into_iter().zip(b).map(|(p, q)| p.min(q)).collect(),
            );
        (out, TransversalMethod::PerBoundaryVertex)
    } else {
        let per: Vec<Vec<f64>> = weights
            .par_iter()
            .map(|w| {
                let seeds: Vec<(usize, f64)> = sources.iter().copied().zip(initial.iter().copied()).collect();
                search::dijkstra(graph, w, &seeds, f64::INFINITY).dist
            })
            .collect();
        let mut out = per[0].clone();
        for d in &per[1..] {
            for (a, &b) in out.iter_mut().zip(d) {
                *a = a.max(b);
            }
        }
        (out, TransversalMethod::VertexwiseMax)
    };

    // u~ is 1-Lipschitz against the edgewise max of the marked weights
    let upper: Vec<f64> = (0..graph.edge_count())
        .map(|e| weights.iter().map(|w| w[e]).fold(0.0, f64::max))
        .collect();
    let mut solution = finish(problem, &wg.with_weights(upper), utilde);
    if !method.exact() {
        solution
            .diagnostics
            .warnings
            .push("u~ evaluated as a vertexwise max of per-marking solves (lower bound)".into());
    }
    let mut gap = 0.0f64;
    let mut unreachable = 0;
    for (a, b) in solution.u.iter().zip(&u) {
        if a.is_finite() {
            if b.is_finite() {
                gap = gap.max((a - b).abs());
            }
        } else {
            unreachable += 1;
        }
    }
    Ok(TransversalSolution {
        solution,
        u,
        method,
        gap,
        unreachable,
    })
}

/// Monge check with `L_f` replaced by the family maximum of `L_f^N`.
/// Vertices where `u~` is not finite are skipped.
#[allow(clippy::too_many_arguments)]
pub fn verify_transversal_monge(
    utilde: &[f64],
    problem: &DirichletProblem<'_>,
    wg: &WeightedGraph<'_>,
    family: &[NullSetMarking],
    sigma_g: &[VertexId],
    sample: &[VertexId],
    radii: &[f64],
    tol: f64,
    reduced: bool,
) -> Result<MongeReport> {
    check_decreasing(radii)?;
    validate_family(wg.graph(), family)?;
    let graph = wg.graph();
    let weights = family_weights(wg, family);
    let targets: Vec<VertexId> = monge_targets(problem, sigma_g, sample, reduced)
        .into_iter()
        .filter(|&v| utilde[v].is_finite())
        .collect();
    Ok(verify_with(utilde, &targets, radii, tol, reduced, |x, r| {
        let mut balls = weights.iter().map(|w| search::ball(graph, w, x, r));
        let mut acc = balls.next().expect("empty marking always present");
        for b in balls {
            // both sorted by vertex id
            let mut merged = Vec::with_capacity(acc.len().min(b.len()));
            let mut j = 0;
            for (v, d) in acc {
                while j < b.len() && b[j].0 < v {
                    j += 1;
                }
                if j < b.len() && b[j].0 == v {
                    merged.push((v, d.max(b[j].1)));
                }
            }
            acc = merged;
        }
        acc
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateCheck {
    pub index: usize,
    /// `v <= g + tol` on the boundary and the weak-subsolution test passes.
    pub member: bool,
    pub reason: Option<String>,
    /// `max (v - u~)^+` over vertices.
    pub excess: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximalWeakReport {
    pub candidates: Vec<CandidateCheck>,
    pub utilde_weak: WeakReport,
}

impl MaximalWeakReport {
    pub fn pass(&self) -> bool {
        self.utilde_weak.all_pass() && self.candidates.iter().all(|c| c.pass)
    }
}

/// (a) every candidate in the weak-subsolution class lies below `u~`;
/// (b) `u~` itself passes the weak-subsolution test off the union of
/// markings. Requires an `L^inf` field.
#[allow(clippy::too_many_arguments)]
pub fn maximal_weak_check(
    utilde: &[f64],
    problem: &DirichletProblem<'_>,
    family: &[NullSetMarking],
    candidates: &[Vec<f64>],
    sample: &[VertexId],
    radii: &[f64],
    tol: f64,
) -> Result<MaximalWeakReport> {
    let graph = problem.graph();
    let f = problem.field();
    if f.linf_bound().is_none() {
        return Err(Error::MissingLinfTag);
    }
    validate_family(graph, family)?;
    let union = NullSetMarking::union(graph, family);
    let finite: Vec<VertexId> = sample.iter().copied().filter(|&v| utilde[v].is_finite()).collect();
    let utilde_weak = weak_solution_check(utilde, graph, f, Some(&union), &finite, radii, tol, WeakMode::Sub)?;
    let mut checks = Vec::new();
    for (index, v) in candidates.iter().enumerate() {
        if v.len() != graph.vertex_count() {
            return Err(Error::InvalidParameter(format!("candidate {index} has wrong length")));
        }
        let mut reason = problem
            .boundary()
            .iter()
            .find(|&(&y, &g)| v[y] > g + tol)
            .map(|(&y, _)| format!("exceeds g at boundary vertex {}", graph.vertex(y).label));
        if reason.is_none() {
            let weak = weak_solution_check(v, graph, f, Some(&union), &finite, radii, tol, WeakMode::Sub)?;
            if !weak.all_pass() {
                reason = Some(format!("fails the weak-subsolution test at {} vertices", weak.failures().len()));
            }
        }
        let excess = v
            .iter()
            .zip(utilde)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| a - b)
            .fold(0.0, f64::max);
        let member = reason.is_none();
        checks.push(CandidateCheck {
            index,
            member,
            reason,
            excess,
            pass: !member || excess <= tol,
        });
    }
    Ok(MaximalWeakReport {
        candidates: checks,
        utilde_weak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::solve_lax;
    use crate::field::{Builtin, WeightField};
    use crate::graph::{grid_domain, Domain, Stencil};
    use crate::monge::verify_monge;
    use crate::quadrature::Quadrature;

    /// Unit square, wall on `x = 0.5` with a gap at `(0.5, 0.5)`.
    fn walled() -> (MetricGraph, NullSetMarking) {
        let g = grid_domain(
            &Domain::Rectangle {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            },
            0.1,
            Stencil::Four,
        )
        .unwrap();
        let on_wall = |v: usize| (g.vertex(v).coords[0] - 0.5).abs() < 1e-9;
        let blocked: Vec<usize> = (0..g.edge_count())
            .filter(|&e| on_wall(g.edge(e).u) && on_wall(g.edge(e).v))
            .collect();
        let gap = g.nearest([0.5, 0.5, 0.0]);
        let m = NullSetMarking::new("wall", blocked, [gap]);
        (g, m)
    }

    fn left_problem(g: &MetricGraph) -> DirichletProblem<'_> {
        let data: Vec<(usize, f64)> = g
            .boundary_vertices()
            .into_iter()
            .filter(|&v| g.vertex(v).coords[0] < 1e-9)
            .map(|v| (v, 0.0))
            .collect();
        DirichletProblem::new(g, WeightField::constant(1.0).unwrap(), &data).unwrap()
    }

    #[test]
    fn wall_forces_detour() {
        let (g, m) = walled();
        let wg = WeightedGraph::new(&g, &WeightField::constant(1.0).unwrap(), &Quadrature::default());
        let a = g.nearest([0.0, 0.0, 0.0]);
        let b = g.nearest([1.0, 0.0, 0.0]);
        let plain = wg.from_sources(&[a], None).unwrap();
        let marked = optical_transversal(&wg, &m, &[a], None).unwrap();
        assert!((plain.dist[b] - 1.0).abs() < 1e-12);
        assert!((marked.dist[b] - 2.0).abs() < 1e-12);
        let path = marked.witness(&g, b);
        let gap = g.nearest([0.5, 0.5, 0.0]);
        assert!(path.segments.iter().any(|s| {
            let e = g.edge(s.edge);
            e.u == gap || e.v == gap
        }));
        let (value, arg) = maximal_optical(&wg, std::slice::from_ref(&m), a, b).unwrap();
        assert_eq!(value, marked.dist[b]);
        assert_eq!(arg, Some(0));
        let (value, arg) = maximal_optical(&wg, &[], a, b).unwrap();
        assert_eq!((value, arg), (plain.dist[b], None));
    }

    #[test]
    fn full_wall_disconnects() {
        let (g, mut m) = walled();
        m.passable_vertices.clear();
        let wg = WeightedGraph::new(&g, &WeightField::constant(1.0).unwrap(), &Quadrature::default());
        let t = optical_transversal(&wg, &m, &[0], None).unwrap();
        assert_eq!(t.dist[g.nearest([1.0, 1.0, 0.0])], f64::INFINITY);
    }

    #[test]
    fn passable_only_marking_changes_nothing() {
        let g = grid_domain(&Domain::Interval { a: -1.0, b: 1.0 }, 0.01, Stencil::Four).unwrap();
        let f = Builtin::InvSqrtAbs.field().unwrap();
        let q = Quadrature::default();
        let p = DirichletProblem::on_flagged_boundary(&g, f, |_| 0.0).unwrap();
        let wg = p.weighted(&q);
        let zero = g.nearest([0.0; 3]);
        let m = NullSetMarking::new("origin", [], [zero]);
        let t = solve_lax_transversal(&p, &wg, &[m]).unwrap();
        assert_eq!(t.solution.u, t.u);
        assert_eq!(t.gap, 0.0);
    }

    #[test]
    fn maximal_solution_on_walled_square() {
        let (g, m) = walled();
        let p = left_problem(&g);
        let q = Quadrature::default();
        let wg = p.weighted(&q);
        let plain = solve_lax(&p, &q).unwrap();

        let empty = solve_lax_transversal(&p, &wg, &[]).unwrap();
        assert_eq!(empty.solution.u, plain.u);
        assert_eq!(empty.method, TransversalMethod::Plain);

        let t = solve_lax_transversal(&p, &wg, std::slice::from_ref(&m)).unwrap();
        assert_eq!(t.method, TransversalMethod::SingleMarking);
        for (v, vert) in g.vertices().iter().enumerate() {
            let [x, y, _] = vert.coords;
            assert!(t.solution.u[v] >= plain.u[v]);
            if x > 0.5 + 1e-9 {
                let exact = 0.5 + (x - 0.5) + (y - 0.5).abs();
                assert!((t.solution.u[v] - exact).abs() < 1e-12, "{x} {y}");
            }
        }
        assert!((t.gap - 0.5).abs() < 1e-12);

        // a second marking that never binds: the exact path must agree
        let edge = g.neighbors(g.nearest([0.9, 0.9, 0.0]))[0].1;
        let other = NullSetMarking::new("corner", [edge], [g.edge(edge).u, g.edge(edge).v]);
        let both = solve_lax_transversal(&p, &wg, &[m.clone(), other]).unwrap();
        assert_eq!(both.method, TransversalMethod::PerBoundaryVertex);
        for (a, b) in both.solution.u.iter().zip(&t.solution.u) {
            assert!(a >= b);
        }

        let all: Vec<usize> = (0..g.vertex_count()).collect();
        let radii = [0.4, 0.2, 0.1];
        let r = verify_transversal_monge(&t.solution.u, &p, &wg, std::slice::from_ref(&m), &t.solution.sigma_g, &all, &radii, 0.05, false)
            .unwrap();
        assert!(r.all_pass());
        let mut bumped = t.solution.u.clone();
        let x = g.nearest([0.8, 0.3, 0.0]);
        bumped[x] += 0.1;
        let r = verify_transversal_monge(&bumped, &p, &wg, std::slice::from_ref(&m), &t.solution.sigma_g, &[x], &radii, 0.05, false)
            .unwrap();
        assert!(!r.entries[0].monge_pass);

        let plain_report = verify_monge(&plain.u, &p, &wg, &plain.sigma_g, &all, &radii, 0.05, false).unwrap();
        let empty_report =
            verify_transversal_monge(&plain.u, &p, &wg, &[], &plain.sigma_g, &all, &radii, 0.05, false).unwrap();
        assert_eq!(plain_report, empty_report);
    }

    #[test]
    fn maximal_weak_subsolution() {
        let (g, m) = walled();
        let p = left_problem(&g);
        let wg = p.weighted(&Quadrature::default());
        let t = solve_lax_transversal(&p, &wg, std::slice::from_ref(&m)).unwrap();
        let ut = &t.solution.u;
        let all: Vec<usize> = (0..g.vertex_count()).collect();
        let radii = [0.2, 0.1];
        let lower: Vec<f64> = ut.iter().map(|v| v - 1.0).collect();
        let higher: Vec<f64> = ut.iter().map(|v| v + 0.1).collect();
        let r = maximal_weak_check(ut, &p, std::slice::from_ref(&m), &[lower, ut.clone(), higher], &all, &radii, 0.05).unwrap();
        assert!(r.utilde_weak.all_pass(), "{:?}", r.utilde_weak.failures());
        assert!(r.candidates[0].member && r.candidates[0].pass);
        assert!(r.candidates[1].member && r.candidates[1].pass);
        assert!(!r.candidates[2].member);
        assert!(r.pass());

        let unbounded = DirichletProblem::new(&g, Builtin::InvSqrtAbs.field().unwrap(), &[(0, 0.0)]).unwrap();
        assert_eq!(
            maximal_weak_check(ut, &unbounded, &[m], &[], &all, &radii, 0.05).unwrap_err(),
            Error::MissingLinfTag
        );
    }

    #[test]
    fn union_keeps_common_passable() {
        let (g, m) = walled();
        let u = NullSetMarking::union(&g, [&m]);
        assert_eq!(u.blocked_edges, m.blocked_edges);
        assert_eq!(u.impassable(&g), m.impassable(&g));
        assert_eq!(u.apply(&g, &g.lengths()), m.apply(&g, &g.lengths()));
    }
}
