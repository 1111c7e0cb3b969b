//! Dirichlet problem through the Lax formula `u(x) = min_y (g(y) + L_f(x, y))`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::WeightField;
use crate::graph::{MetricGraph, VertexId};
use crate::optical::{ModulusBudget, WeightedGraph};
use crate::quadrature::Quadrature;
use crate::search;

/// Absolute tolerance for `u = g` on graphs whose weights are exact.
pub const EXACT_SIGMA_TOL: f64 = 1e-9;

/// Boundary pairs whose `|Sigma_g| * |V|` exceeds this skip the automatic
/// boundary modulus in [`solve_lax`].
const AUTO_MODULUS_BUDGET: usize = 20_000_000;

#[derive(Debug, Clone)]
pub struct DirichletProblem<'g> {
    graph: &'g MetricGraph,
    f: WeightField,
    boundary: BTreeMap<VertexId, f64>,
}

impl<'g> DirichletProblem<'g> {
    /// `data` lists `(vertex, g)`; every vertex must carry the boundary flag.
    pub fn new(graph: &'g MetricGraph, f: WeightField, data: &[(VertexId, f64)]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyBoundary);
        }
        let mut boundary = BTreeMap::new();
        for &(v, g) in data {
            if v >= graph.vertex_count() {
                return Err(Error::UnknownVertex(v));
            }
            if !graph.vertex(v).boundary {
                return Err(Error::InvalidParameter(format!(
                    "vertex {} is not a boundary vertex",
                    graph.vertex(v).label
                )));
            }
            if !g.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "boundary value at vertex {} is not finite",
                    graph.vertex(v).label
                )));
            }
            boundary.insert(v, g);
        }
        Ok(DirichletProblem { graph, f, boundary })
    }

    /// Every boundary-flagged vertex with `g(v) = data(v)`.
    pub fn on_flagged_boundary(
        graph: &'g MetricGraph,
        f: WeightField,
        g: impl Fn(&crate::graph::Vertex) -> f64,
    ) -> Result<Self> {
        let data: Vec<(VertexId, f64)> = graph
            .boundary_vertices()
            .into_iter()
            .map(|v| (v, g(graph.vertex(v))))
            .collect();
        Self::new(graph, f, &data)
    }

    pub fn graph(&self) -> &'g MetricGraph {
        self.graph
    }

    pub fn field(&self) -> &WeightField {
        &self.f
    }

    pub fn boundary(&self) -> &BTreeMap<VertexId, f64> {
        &self.boundary
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.boundary.contains_key(&v)
    }

    pub fn weighted(&self, quad: &Quadrature) -> WeightedGraph<'g> {
        WeightedGraph::new(self.graph, &self.f, quad)
    }

    /// Same graph and field with different boundary data.
    pub fn with_data(&self, data: &[(VertexId, f64)]) -> Result<Self> {
        Self::new(self.graph, self.f.clone(), data)
    }

    /// Tolerance for `u(y) = g(y)`: absolute on exact weights, ten times the
    /// quadrature tolerance (relative to `|g|`) otherwise.
    pub fn sigma_tolerance(&self, wg: &WeightedGraph<'_>, g: f64) -> f64 {
        match wg.meta().quadrature {
            Some(q) if q.tol.is_finite() => (10.0 * q.tol * g.abs().max(1.0)).max(EXACT_SIGMA_TOL),
            Some(_) => 1e-6 * g.abs().max(1.0),
            None => EXACT_SIGMA_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Modulus {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub compatibility_ok: bool,
    pub boundary_modulus: Option<Modulus>,
    pub lax_inequality_max_violation: f64,
    pub unreachable: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub u: Vec<f64>,
    pub sigma_g: Vec<VertexId>,
    pub diagnostics: Diagnostics,
}

impl Solution {
    pub fn in_sigma(&self, v: VertexId) -> bool {
        self.sigma_g.binary_search(&v).is_ok()
    }

    /// CSV with columns `vertex_id,x,y,u,in_sigma_g`.
    pub fn write_csv<W: Write>(&self, graph: &MetricGraph, mut out: W) -> std::io::Result<()> {
        writeln!(out, "vertex_id,x,y,u,in_sigma_g")?;
        for (v, vert) in graph.vertices().iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                vert.label,
                vert.coords[0],
                vert.coords[1],
                self.u[v],
                self.in_sigma(v)
            )?;
        }
        Ok(())
    }
}

/// `r0 * 2^-k` for `k = 0..=6` with `r0 = 0.1 * diameter`.
pub fn default_radii(diameter: f64) -> Vec<f64> {
    let r0 = 0.1 * diameter;
    (0..=6).map(|k| r0 * 0.5f64.powi(k)).collect()
}

pub fn solve_lax(problem: &DirichletProblem<'_>, quad: &Quadrature) -> Result<Solution> {
    solve_weighted(problem, &problem.weighted(quad))
}

/// [`solve_lax`] against precomputed edge weights.
pub fn solve_weighted(problem: &DirichletProblem<'_>, wg: &WeightedGraph<'_>) -> Result<Solution> {
    let u = lax_values(problem, wg)?;
    Ok(finish(problem, wg, u))
}

pub(crate) fn lax_values(problem: &DirichletProblem<'_>, wg: &WeightedGraph<'_>) -> Result<Vec<f64>> {
    let sources: Vec<VertexId> = problem.boundary.keys().copied().collect();
    let initial: Vec<f64> = problem.boundary.values().copied().collect();
    Ok(wg.from_sources(&sources, Some(&initial))?.dist)
}

/// Fills `sigma_g` and the diagnostics for a vertex function `u`.
pub(crate) fn finish(problem: &DirichletProblem<'_>, wg: &WeightedGraph<'_>, u: Vec<f64>) -> Solution {
    let sigma_g = sigma_of(problem, wg, &u);
    let compatibility_ok = sigma_g.len() == problem.boundary.len();
    let mut warnings = Vec::new();
    if !compatibility_ok {
        warnings.push(format!(
            "boundary data lost on {} of {} boundary vertices; solving the reduced problem",
            problem.boundary.len() - sigma_g.len(),
            problem.boundary.len()
        ));
    }
    let unreachable = u.iter().filter(|v| !v.is_finite()).count();
    if unreachable > 0 {
        warnings.push(format!(
            "{unreachable} vertices have no finite-cost path to the boundary"
        ));
    }
    let boundary_modulus = if sigma_g.len().saturating_mul(u.len()) <= AUTO_MODULUS_BUDGET {
        let radii = default_radii(problem.graph.diameter_estimate());
        boundary_modulus_of(problem, &u, &sigma_g, &radii).ok()
    } else {
        warnings.push("boundary modulus skipped: graph too large".into());
        None
    };
    Solution {
        diagnostics: Diagnostics {
            compatibility_ok,
            boundary_modulus,
            lax_inequality_max_violation: wg.lipschitz_excess(&u).max(0.0),
            unreachable,
            warnings,
        },
        u,
        sigma_g,
    }
}

fn sigma_of(problem: &DirichletProblem<'_>, wg: &WeightedGraph<'_>, u: &[f64]) -> Vec<VertexId> {
    problem
        .boundary
        .iter()
        .filter(|&(&y, &g)| g <= u[y] + problem.sigma_tolerance(wg, g))
        .map(|(&y, _)| y)
        .collect()
}

/// `Sigma_g = { y : g(y) <= u(y) + tol }`.
pub fn effective_boundary(problem: &DirichletProblem<'_>, solution: &Solution, tol: f64) -> Vec<VertexId> {
    problem
        .boundary
        .iter()
        .filter(|&(&y, &g)| g <= solution.u[y] + tol)
        .map(|(&y, _)| y)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibilityViolation {
    pub x: VertexId,
    pub y: VertexId,
    /// `g(x) - g(y) - L_f(x, y)`.
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibilityReport {
    pub ok: bool,
    pub violations: Vec<CompatibilityViolation>,
}

/// Pairwise check of `g(x) <= L_f(x, y) + g(y)` on the boundary, tolerance
/// `1e-9`. Only vertices where the Lax value falls below `g` can violate it,
/// so full distance tables are computed from those alone.
pub fn check_compatibility(problem: &DirichletProblem<'_>, quad: &Quadrature) -> Result<CompatibilityReport> {
    check_compatibility_weighted(problem, &problem.weighted(quad))
}

pub fn check_compatibility_weighted(
    problem: &DirichletProblem<'_>,
    wg: &WeightedGraph<'_>,
) -> Result<CompatibilityReport> {
    const TOL: f64 = 1e-9;
    let u = lax_values(problem, wg)?;
    let suspects: Vec<(VertexId, f64)> = problem
        .boundary
        .iter()
        .filter(|&(&x, &g)| u[x] < g - TOL)
        .map(|(&x, &g)| (x, g))
        .collect();
    let mut violations: Vec<CompatibilityViolation> = suspects
        .par_iter()
        .flat_map_iter(|&(x, gx)| {
            let l = wg.distances_from(x);
            problem
                .boundary
                .iter()
                .filter_map(move |(&y, &gy)| {
                    let amount = gx - gy - l[y];
                    (amount > TOL).then_some(CompatibilityViolation { x, y, amount })
                })
                .collect::<Vec<_>>()
        })
        .collect();
    violations.sort_by_key(|a| (a.x, a.y));
    Ok(CompatibilityReport {
        ok: violations.is_empty(),
        violations,
    })
}

/// `sup { |u(x) - g(y)| : y in Sigma_g, d_G(x, y) <= delta }` per `delta`.
pub fn boundary_modulus(
    problem: &DirichletProblem<'_>,
    solution: &Solution,
    deltas: &[f64],
) -> Result<Modulus> {
    boundary_modulus_of(problem, &solution.u, &solution.sigma_g, deltas)
}

fn boundary_modulus_of(
    problem: &DirichletProblem<'_>,
    u: &[f64],
    sigma: &[VertexId],
    deltas: &[f64],
) -> Result<Modulus> {
    if sigma.is_empty() {
        return Err(Error::EmptyEffectiveBoundary);
    }
    check_radii(deltas)?;
    let graph = problem.graph;
    let lengths = graph.lengths();
    let dmax = deltas.iter().copied().fold(0.0, f64::max);
    let partial: Vec<Vec<f64>> = sigma
        .par_iter()
        .map(|&y| {
            let gy = problem.boundary[&y];
            let mut out = vec![0.0f64; deltas.len()];
            for (x, d) in search::ball(graph, &lengths, y, dmax) {
                let gap = (u[x] - gy).abs();
                for (k, &delta) in deltas.iter().enumerate() {
                    if d <= delta {
                        out[k] = out[k].max(gap);
                    }
                }
            }
            out
        })
        .collect();
    Ok(Modulus {
        radii: deltas.to_vec(),
        values: fold_max(partial, deltas.len()),
    })
}

/// `sup { |u(x) - u(y)| : d_G(x, y) <= delta }` over all pairs (or over
/// sampled sources above the budget). Detects discontinuity of `u` in `d`
/// away from the boundary, which [`boundary_modulus`] cannot see.
pub fn interior_modulus(
    graph: &MetricGraph,
    u: &[f64],
    deltas: &[f64],
    budget: &ModulusBudget,
) -> Result<Modulus> {
    check_radii(deltas)?;
    let n = graph.vertex_count();
    let sources: Vec<VertexId> = if n <= budget.all_pairs_limit {
        (0..n).collect()
    } else {
        let k = budget.sample_sources.ok_or(Error::BudgetExceeded {
            vertices: n,
            limit: budget.all_pairs_limit,
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        let picked: BTreeSet<VertexId> = (0..k).map(|_| rng.gen_range(0..n)).collect();
        picked.into_iter().collect()
    };
    let lengths = graph.lengths();
    let dmax = deltas.iter().copied().fold(0.0, f64::max);
    let partial: Vec<Vec<f64>> = sources
        .par_iter()
        .filter(|&&x| u[x].is_finite())
        .map(|&x| {
            let mut out = vec![0.0f64; deltas.len()];
            for (y, d) in search::ball(graph, &lengths, x, dmax) {
                if !u[y].is_finite() {
                    continue;
                }
                let gap = (u[x] - u[y]).abs();
                for (k, &delta) in deltas.iter().enumerate() {
                    if d <= delta {
                        out[k] = out[k].max(gap);
                    }
                }
            }
            out
        })
        .collect();
    Ok(Modulus {
        radii: deltas.to_vec(),
        values: fold_max(partial, deltas.len()),
    })
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParameter("radii must be positive and finite".into()));
    }
    Ok(())
}

fn fold_max(parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; len];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o = o.max(v);
        }
    }
    out
}
