//! Finite-radius slopes and the Monge, weak-solution and comparison checks.
//!
//! A slope at `x` is reported as a curve over a decreasing list of radii:
//! for each `r`, the sup of a difference quotient over the `y != x` whose
//! distance to `x` is at most `r`. The extrapolated value is the one at the
//! smallest radius with at least three admissible `y` (or, failing that, the
//! smallest radius with any).

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dirichlet::{default_radii, DirichletProblem};
use crate::error::{Error, Result};
use crate::field::{EdgeRef, WeightField};
use crate::graph::{MetricGraph, VertexId};
use crate::optical::WeightedGraph;
use crate::search;
use crate::transversal::NullSetMarking;

/// Minimum neighborhood size for the extrapolated value.
pub const WELL_POPULATED: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeMode {
    SubF,
    SuperF,
    FullF,
    SubD,
    FullD,
}

impl SlopeMode {
    pub fn name(self) -> &'static str {
        match self {
            SlopeMode::SubF => "sub_f",
            SlopeMode::SuperF => "super_f",
            SlopeMode::FullF => "full_f",
            SlopeMode::SubD => "sub_d",
            SlopeMode::FullD => "full_d",
        }
    }

    fn quotient(self, ux: f64, uy: f64, dist: f64) -> f64 {
        let diff = match self {
            SlopeMode::SubF | SlopeMode::SubD => (ux - uy).max(0.0),
            SlopeMode::SuperF => (uy - ux).max(0.0),
            SlopeMode::FullF | SlopeMode::FullD => (ux - uy).abs(),
        };
        diff / dist
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub vertex: VertexId,
    pub mode: SlopeMode,
    pub radii: Vec<f64>,
    /// `None` where no `y` lies within the radius.
    pub values: Vec<Option<f64>>,
    pub counts: Vec<usize>,
    pub extrapolated: f64,
}

pub(crate) fn check_decreasing(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParameter("radii must be positive and finite".into()));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("radii must be strictly decreasing".into()));
    }
    Ok(())
}

/// Slope at `x` from a precomputed neighborhood `(y, dist(x, y))` covering
/// at least `radii[0]`.
pub(crate) fn slope_from_neighborhood(
    u: &[f64],
    x: VertexId,
    radii: &[f64],
    mode: SlopeMode,
    neighborhood: &[(VertexId, f64)],
) -> Result<SlopeEstimate> {
    check_decreasing(radii)?;
    let ux = u[x];
    if !ux.is_finite() {
        return Err(Error::InvalidParameter(format!("u is not finite at vertex {x}")));
    }
    let mut values: Vec<Option<f64>> = vec![None; radii.len()];
    let mut counts = vec![0usize; radii.len()];
    for &(y, dist) in neighborhood {
        if y == x || !(dist > 0.0) || !u[y].is_finite() {
            continue;
        }
        let q = mode.quotient(ux, u[y], dist);
        for (k, &r) in radii.iter().enumerate() {
            if dist > r {
                break;
            }
            counts[k] += 1;
            values[k] = Some(values[k].map_or(q, |v: f64| v.max(q)));
        }
    }
    if counts[0] == 0 {
        return Err(Error::EmptyNeighborhood {
            vertex: x,
            radius: radii[0],
        });
    }
    let pick = (0..radii.len())
        .rev()
        .find(|&k| counts[k] >= WELL_POPULATED)
        .or_else(|| (0..radii.len()).rev().find(|&k| counts[k] > 0))
        .expect("largest radius is populated");
    Ok(SlopeEstimate {
        vertex: x,
        mode,
        radii: radii.to_vec(),
        extrapolated: values[pick].expect("populated radius has a value"),
        values,
        counts,
    })
}

fn slope_f(u: &[f64], wg: &WeightedGraph<'_>, x: VertexId, radii: &[f64], mode: SlopeMode) -> Result<SlopeEstimate> {
    check_decreasing(radii)?;
    slope_from_neighborhood(u, x, radii, mode, &wg.ball(x, radii[0]))
}

/// `sup (u(x) - u(y))^+ / L_f(x, y)` over `L_f(x, y) <= r`.
pub fn subslope_f(u: &[f64], wg: &WeightedGraph<'_>, x: VertexId, radii: &[f64]) -> Result<SlopeEstimate> {
    slope_f(u, wg, x, radii, SlopeMode::SubF)
}

/// `sup (u(y) - u(x))^+ / L_f(x, y)` over `L_f(x, y) <= r`.
pub fn superslope_f(u: &[f64], wg: &WeightedGraph<'_>, x: VertexId, radii: &[f64]) -> Result<SlopeEstimate> {
    slope_f(u, wg, x, radii, SlopeMode::SuperF)
}

/// `sup |u(y) - u(x)| / L_f(x, y)` over `L_f(x, y) <= r`.
pub fn full_slope_f(u: &[f64], wg: &WeightedGraph<'_>, x: VertexId, radii: &[f64]) -> Result<SlopeEstimate> {
    slope_f(u, wg, x, radii, SlopeMode::FullF)
}

/// `sup |u(y) - u(x)| / d_G(x, y)` over `d_G(x, y) <= r`.
pub fn slope_d(u: &[f64], graph: &MetricGraph, x: VertexId, radii: &[f64]) -> Result<SlopeEstimate> {
    check_decreasing(radii)?;
    let ball = search::ball(graph, &graph.lengths(), x, radii[0]);
    slope_from_neighborhood(u, x, radii, SlopeMode::FullD, &ball)
}

/// `sup (u(x) - u(y))^+ / d_G(x, y)` over `d_G(x, y) <= r`.
pub fn subslope_d(u: &[f64], graph: &MetricGraph, x: VertexId, radii: &[f64]) -> Result<SlopeEstimate> {
    check_decreasing(radii)?;
    let ball = search::ball(graph, &graph.lengths(), x, radii[0]);
    slope_from_neighborhood(u, x, radii, SlopeMode::SubD, &ball)
}

/// Up to `count` vertices drawn without replacement from `candidates`,
/// returned sorted.
pub fn sample_vertices(candidates: &[VertexId], count: usize, seed: u64) -> Vec<VertexId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<VertexId> = candidates
        .choose_multiple(&mut rng, count.min(candidates.len()))
        .copied()
        .collect();
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MongeEntry {
    pub vertex: VertexId,
    pub subslope: Option<SlopeEstimate>,
    pub superslope: Option<SlopeEstimate>,
    /// `|subslope - 1| <= tol`.
    pub monge_pass: bool,
    /// `superslope <= subslope + tol`.
    pub semicontinuity_pass: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MongeReport {
    pub tol: f64,
    pub reduced: bool,
    pub entries: Vec<MongeEntry>,
}

impl MongeReport {
    pub fn monge_fraction(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().filter(|e| e.monge_pass).count() as f64 / self.entries.len() as f64
    }

    pub fn semicontinuity_ok(&self) -> bool {
        self.entries.iter().all(|e| e.semicontinuity_pass)
    }

    pub fn all_pass(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|e| e.monge_pass && e.semicontinuity_pass)
    }

    pub fn entry(&self, v: VertexId) -> Option<&MongeEntry> {
        self.entries.iter().find(|e| e.vertex == v)
    }

    /// CSV with columns `vertex_id,mode,radius,value,pass`.
    pub fn write_csv<W: Write>(&self, graph: &MetricGraph, mut out: W) -> std::io::Result<()> {
        writeln!(out, "vertex_id,mode,radius,value,pass")?;
        for e in &self.entries {
            let label = &graph.vertex(e.vertex).label;
            for (est, pass) in [(&e.subslope, e.monge_pass), (&e.superslope, e.semicontinuity_pass)] {
                if let Some(est) = est {
                    for (r, v) in est.radii.iter().zip(&est.values) {
                        let value = v.map(|v| v.to_string()).unwrap_or_default();
                        writeln!(out, "{label},{},{r},{value},{pass}", est.mode.name())?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Vertices checked by [`verify_monge`]: `sample` minus the boundary of the
/// problem, or minus `Sigma_g` only in reduced mode.
pub fn monge_targets(
    problem: &DirichletProblem<'_>,
    sigma_g: &[VertexId],
    sample: &[VertexId],
    reduced: bool,
) -> Vec<VertexId> {
    sample
        .iter()
        .copied()
        .filter(|&v| {
            if reduced {
                sigma_g.binary_search(&v).is_err()
            } else {
                !problem.is_boundary(v)
            }
        })
        .collect()
}

/// Monge check against an arbitrary neighborhood oracle: `neighborhood(x, r)`
/// returns `(y, dist)` for every `y` within `r` of `x`.
pub(crate) fn verify_with<N>(u: &[f64], targets: &[VertexId], radii: &[f64], tol: f64, reduced: bool, neighborhood: N) -> MongeReport
where
    N: Fn(VertexId, f64) -> Vec<(VertexId, f64)> + Sync,
{
    let entries = targets
        .par_iter()
        .map(|&x| {
            let nb = neighborhood(x, radii[0]);
            let sub = slope_from_neighborhood(u, x, radii, SlopeMode::SubF, &nb);
            let sup = slope_from_neighborhood(u, x, radii, SlopeMode::SuperF, &nb);
            match (sub, sup) {
                (Ok(sub), Ok(sup)) => MongeEntry {
                    vertex: x,
                    monge_pass: (sub.extrapolated - 1.0).abs() <= tol,
                    semicontinuity_pass: sup.extrapolated <= sub.extrapolated + tol,
                    subslope: Some(sub),
                    superslope: Some(sup),
                    note: None,
                },
                (Err(e), _) | (_, Err(e)) => MongeEntry {
                    vertex: x,
                    subslope: None,
                    superslope: None,
                    monge_pass: false,
                    semicontinuity_pass: false,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect();
    MongeReport { tol, reduced, entries }
}

/// Per-vertex `|subslope_f - 1| <= tol` and `superslope_f <= subslope_f + tol`.
pub fn verify_monge(
    u: &[f64],
    problem: &DirichletProblem<'_>,
    wg: &WeightedGraph<'_>,
    sigma_g: &[VertexId],
    sample: &[VertexId],
    radii: &[f64],
    tol: f64,
    reduced: bool,
) -> Result<MongeReport> {
    check_decreasing(radii)?;
    let targets = monge_targets(problem, sigma_g, sample, reduced);
    Ok(verify_with(u, &targets, radii, tol, reduced, |x, r| wg.ball(x, r)))
}

/// Radii for `verify_monge` in `L_f` units.
pub fn default_radii_f(wg: &WeightedGraph<'_>) -> Vec<f64> {
    default_radii(wg.diameter_estimate())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub boundary_ordering_ok: bool,
    /// `max (u_sub - v_super)^+` over vertices.
    pub max_violation: f64,
    pub worst_vertex: Option<VertexId>,
    /// Conclusion of the comparison; vacuous when the boundary ordering fails.
    pub pass: bool,
}

pub fn comparison_check(u_sub: &[f64], v_super: &[f64], boundary_ordering_ok: bool, tol: f64) -> Result<ComparisonReport> {
    if u_sub.len() != v_super.len() {
        return Err(Error::InvalidParameter(format!(
            "maps of length {} and {}",
            u_sub.len(),
            v_super.len()
        )));
    }
    let mut max_violation = 0.0f64;
    let mut worst_vertex = None;
    for (v, (&a, &b)) in u_sub.iter().zip(v_super).enumerate() {
        if a == f64::NEG_INFINITY || b == f64::INFINITY {
            continue;
        }
        let gap = a - b;
        if gap.is_nan() {
            continue;
        }
        if gap > max_violation {
            max_violation = gap;
            worst_vertex = Some(v);
        }
    }
    Ok(ComparisonReport {
        boundary_ordering_ok,
        max_violation,
        worst_vertex,
        pass: !boundary_ordering_ok || max_violation <= tol,
    })
}

/// Vertex value of `f`: the average over incident edges of `f` just inside
/// each edge.
pub fn vertex_value(graph: &MetricGraph, f: &WeightField, v: VertexId) -> f64 {
    let nb = graph.neighbors(v);
    let mut sum = 0.0;
    for &(_, id) in nb {
        let e = EdgeRef::of(graph, id);
        let offset = 1e-9 * e.length;
        let s = if graph.edge(id).u == v { offset } else { e.length - offset };
        sum += f.eval(&e, s);
    }
    sum / nb.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakMode {
    /// `|slope_d - f| <= tol * max(1, f)`.
    Full,
    /// `slope_d <= f + tol`.
    Sub,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakEntry {
    pub vertex: VertexId,
    pub slope: Option<f64>,
    pub f: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakReport {
    pub mode: WeakMode,
    pub tol: f64,
    pub entries: Vec<WeakEntry>,
    pub skipped_on_marking: usize,
}

impl WeakReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> Vec<VertexId> {
        self.entries.iter().filter(|e| !e.pass).map(|e| e.vertex).collect()
    }
}

/// Compares `slope_d(u)` with `f` at sampled vertices, skipping vertices that
/// touch a blocked edge of `excluded` and boundary-flagged vertices. With a
/// marking, `d_G` balls are taken in the graph with the marking applied.
pub fn weak_solution_check(
    u: &[f64],
    graph: &MetricGraph,
    f: &WeightField,
    excluded: Option<&NullSetMarking>,
    sample: &[VertexId],
    radii: &[f64],
    tol: f64,
    mode: WeakMode,
) -> Result<WeakReport> {
    check_decreasing(radii)?;
    let lengths = match excluded {
        Some(m) => m.apply(graph, &graph.lengths()),
        None => graph.lengths(),
    };
    let mut skipped_on_marking = 0;
    let mut targets = Vec::new();
    for &v in sample {
        if graph.vertex(v).boundary {
            continue;
        }
        if excluded.is_some_and(|m| m.touches(graph, v)) {
            skipped_on_marking += 1;
            continue;
        }
        targets.push(v);
    }
    let entries = targets
        .par_iter()
        .map(|&x| {
            let fx = vertex_value(graph, f, x);
            let ball = search::ball(graph, &lengths, x, radii[0]);
            let slope = slope_from_neighborhood(u, x, radii, SlopeMode::FullD, &ball)
                .ok()
                .map(|s| s.extrapolated);
            let pass = match (slope, mode) {
                (Some(s), WeakMode::Full) => (s - fx).abs() <= tol * fx.max(1.0),
                (Some(s), WeakMode::Sub) => s <= fx + tol,
                (None, _) => false,
            };
            WeakEntry {
                vertex: x,
                slope,
                f: fx,
                pass,
            }
        })
        .collect();
    Ok(WeakReport {
        mode,
        tol,
        entries,
        skipped_on_marking,
    })
}
