//! Homogeneous dimension, Hölder fits of `L_f` (or `u`) against `d_G`, and
//! the Lipschitz bound for bounded `f`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Integrability, WeightField};
use crate::graph::{MetricGraph, VertexId};
use crate::optical::WeightedGraph;
use crate::search;

/// Fewest pairs accepted by [`fit_holder`].
pub const MIN_PAIRS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// Root mean square of the residuals.
    pub residual: f64,
    pub n: usize,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn least_squares(points: &[(f64, f64)]) -> Option<LineFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let slope_stderr = if n > 2 { (ssr / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr,
        residual: (ssr / nf).sqrt(),
        n,
    })
}

/// Measure of the closed `d_G` ball, with edges partly inside pro-rated by
/// the covered length `min(l, (r - d_u)^+ + (r - d_v)^+)`.
pub fn ball_measure(graph: &MetricGraph, center: VertexId, radius: f64) -> f64 {
    let lengths = graph.lengths();
    let ball: BTreeMap<VertexId, f64> = search::ball(graph, &lengths, center, radius).into_iter().collect();
    let mut total = 0.0;
    let mut seen = std::collections::BTreeSet::new();
    for &v in ball.keys() {
        for &(_, e) in graph.neighbors(v) {
            if !seen.insert(e) {
                continue;
            }
            let edge = graph.edge(e);
            let reach = |w: VertexId| ball.get(&w).map_or(0.0, |d| (radius - d).max(0.0));
            let covered = (reach(edge.u) + reach(edge.v)).min(edge.length);
            total += edge.measure * covered / edge.length;
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QEstimate {
    pub q: f64,
    pub residual: f64,
    pub intercept: f64,
    /// `(r, mean ball measure)` over the centers.
    pub curve: Vec<(f64, f64)>,
}

/// Slope of `log mu(B_r)` against `log r`, pooled over the centers.
pub fn estimate_q(graph: &MetricGraph, radii: &[f64], centers: &[VertexId]) -> Result<QEstimate> {
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParameter("radii must be positive and finite".into()));
    }
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().copied().fold(0.0, f64::max);
    if radii.len() < 2 || hi < 10.0 * lo {
        return Err(Error::DegenerateRadii);
    }
    if centers.is_empty() {
        return Err(Error::InvalidParameter("no centers".into()));
    }
    let rows: Vec<Vec<f64>> = centers
        .par_iter()
        .map(|&c| radii.iter().map(|&r| ball_measure(graph, c, r)).collect())
        .collect();
    let mut points = Vec::new();
    let mut curve = Vec::new();
    for (k, &r) in radii.iter().enumerate() {
        let mut sum = 0.0;
        for row in &rows {
            if row[k] > 0.0 {
                points.push((r.ln(), row[k].ln()));
            }
            sum += row[k];
        }
        curve.push((r, sum / rows.len() as f64));
    }
    let fit = least_squares(&points).ok_or(Error::DegenerateRadii)?;
    Ok(QEstimate {
        q: fit.slope,
        residual: fit.residual,
        intercept: fit.intercept,
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderFit {
    pub exponent: f64,
    pub constant: f64,
    /// `exponent -+ 2` standard errors.
    pub band: (f64, f64),
    pub window: (f64, f64),
    pub pairs_used: usize,
}

/// Fit `L = C d^a` on pairs with `d` in `window` (default: the smallest
/// decade of the positive `d` values).
pub fn fit_holder(pairs: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<HolderFit> {
    let usable: Vec<(f64, f64)> = pairs
        .iter()
        .copied()
        .filter(|&(d, l)| d > 0.0 && d.is_finite() && l > 0.0 && l.is_finite())
        .collect();
    let window = window.unwrap_or_else(|| {
        let dmin = usable.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        (dmin, 10.0 * dmin)
    });
    let points: Vec<(f64, f64)> = usable
        .iter()
        .filter(|&&(d, _)| d >= window.0 && d <= window.1 * (1.0 + 1e-12))
        .map(|&(d, l)| (d.ln(), l.ln()))
        .collect();
    if points.len() < MIN_PAIRS {
        return Err(Error::InsufficientPairs {
            needed: MIN_PAIRS,
            got: points.len(),
        });
    }
    let fit = least_squares(&points).ok_or(Error::InsufficientPairs {
        needed: MIN_PAIRS,
        got: points.len(),
    })?;
    Ok(HolderFit {
        exponent: fit.slope,
        constant: fit.intercept.exp(),
        band: (fit.slope - 2.0 * fit.slope_stderr, fit.slope + 2.0 * fit.slope_stderr),
        window,
        pairs_used: points.len(),
    })
}

/// `(d_G(x, y), L_f(x, y))` for every `y != x`.
pub fn optical_pairs(wg: &WeightedGraph<'_>, x: VertexId) -> Vec<(f64, f64)> {
    let d = wg.graph().distances_from(x);
    let l = wg.distances_from(x);
    (0..d.len()).filter(|&y| y != x).map(|y| (d[y], l[y])).collect()
}

/// `(d_G(x, y), |u(x) - u(y)|)` for every `y != x`.
pub fn solution_pairs(graph: &MetricGraph, u: &[f64], x: VertexId) -> Vec<(f64, f64)> {
    let d = graph.distances_from(x);
    (0..d.len())
        .filter(|&y| y != x)
        .map(|y| (d[y], (u[x] - u[y]).abs()))
        .collect()
}

pub fn write_pairs_csv<W: Write>(pairs: &[(f64, f64)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "d,value")?;
    for (d, v) in pairs {
        writeln!(out, "{d},{v}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzCheck {
    pub max_ratio: f64,
    pub quasiconvexity: f64,
    pub linf: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `max L_f / d_G` over the pairs against `C ||f||_inf`, `C` the graph's
/// quasiconvexity constant.
pub fn check_lipschitz_a2(wg: &WeightedGraph<'_>, f: &WeightField, pairs: &[(VertexId, VertexId)]) -> Result<LipschitzCheck> {
    let linf = f.linf_bound().ok_or(Error::MissingLinfTag)?;
    let graph = wg.graph();
    let mut by_source: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    for &(x, y) in pairs {
        if x >= graph.vertex_count() {
            return Err(Error::UnknownVertex(x));
        }
        if y >= graph.vertex_count() {
            return Err(Error::UnknownVertex(y));
        }
        if x != y {
            by_source.entry(x).or_default().push(y);
        }
    }
    let max_ratio = by_source
        .into_par_iter()
        .map(|(x, ys)| {
            let d = graph.distances_from(x);
            let l = wg.distances_from(x);
            ys.into_iter().map(|y| l[y] / d[y]).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let c = graph.quasiconvexity();
    let bound = c * linf;
    Ok(LipschitzCheck {
        max_ratio,
        quasiconvexity: c,
        linf,
        bound,
        pass: max_ratio <= bound * (1.0 + 1e-12),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Assumption {
    A1 { p: f64 },
    A2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub q: QEstimate,
    pub holder: HolderFit,
    pub predicted_exponent: f64,
    pub constant_estimate: f64,
    pub assumption: Option<Assumption>,
    /// The fitted band lies entirely below the predicted exponent.
    pub below_prediction: bool,
    pub lipschitz: Option<LipschitzCheck>,
}

/// Predicted exponent `1 - Q/p` under `L^p`, `1` under `L^inf`.
pub fn assumption_of(f: &WeightField) -> Option<Assumption> {
    match f.integrability() {
        Integrability::Lp(p) => Some(Assumption::A1 { p }),
        Integrability::Linf(_) => Some(Assumption::A2),
        Integrability::Unspecified => None,
    }
}

pub fn regularity_report(
    q: QEstimate,
    holder: HolderFit,
    f: &WeightField,
    lipschitz: Option<LipschitzCheck>,
) -> RegularityReport {
    let assumption = assumption_of(f);
    let predicted_exponent = match assumption {
        Some(Assumption::A1 { p }) => 1.0 - q.q / p,
        Some(Assumption::A2) => 1.0,
        None => f64::NAN,
    };
    RegularityReport {
        below_prediction: holder.band.1 < predicted_exponent,
        constant_estimate: holder.constant,
        predicted_exponent,
        assumption,
        q,
        holder,
        lipschitz,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Builtin;
    use crate::graph::{grid_domain, Domain, Stencil};
    use crate::quadrature::Quadrature;

    #[test]
    fn exact_power_law() {
        let pairs: Vec<(f64, f64)> = (1..=20).map(|k| {
            let d = 0.01 * k as f64 / 2.0;
            (d, 3.0 * d.powf(0.7))
        }).collect();
        let fit = fit_holder(&pairs, Some((0.0, 1.0))).unwrap();
        assert!((fit.exponent - 0.7).abs() < 1e-9);
        assert!((fit.constant - 3.0).abs() < 1e-9);
        assert!(fit_holder(&pairs[..5], Some((0.0, 1.0))).is_err());
    }

    #[test]
    fn sqrt_optical_pairs() {
        let g = grid_domain(&Domain::Interval { a: -1.0, b: 1.0 }, 1e-3, Stencil::Four).unwrap();
        let wg = WeightedGraph::new(&g, &Builtin::InvSqrtAbs.field().unwrap(), &Quadrature::default());
        let pairs = optical_pairs(&wg, g.nearest([0.0; 3]));
        let fit = fit_holder(&pairs, None).unwrap();
        assert!((fit.exponent - 0.5).abs() < 0.05, "{fit:?}");
        assert!((fit.constant - 2.0).abs() < 0.2, "{fit:?}");
    }

    #[test]
    fn interval_dimension() {
        let g = grid_domain(&Domain::Interval { a: -1.0, b: 1.0 }, 1e-3, Stencil::Four).unwrap();
        let c = g.nearest([0.0; 3]);
        let q = estimate_q(&g, &[0.01, 0.03, 0.1, 0.3], &[c]).unwrap();
        assert!((q.q - 1.0).abs() < 0.1, "{q:?}");
        assert!(matches!(estimate_q(&g, &[0.1, 0.3], &[c]), Err(Error::DegenerateRadii)));
    }

    #[test]
    fn partial_edges_prorated() {
        let g = grid_domain(&Domain::Interval { a: 0.0, b: 1.0 }, 0.5, Stencil::Four).unwrap();
        // ball of radius 0.2 around 0.5 covers [0.3, 0.7]
        assert!((ball_measure(&g, 1, 0.2) - 0.4).abs() < 1e-12);
        assert!((ball_measure(&g, 0, 0.75) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_bound() {
        let g = grid_domain(
            &Domain::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            },
            0.1,
            Stencil::Eight,
        )
        .unwrap();
        let f = WeightField::constant(3.0).unwrap();
        let wg = WeightedGraph::new(&g, &f, &Quadrature::default());
        let pairs: Vec<(usize, usize)> = (0..g.vertex_count()).step_by(17).map(|v| (0, v)).collect();
        let r = check_lipschitz_a2(&wg, &f, &pairs).unwrap();
        assert!((r.max_ratio - 3.0).abs() < 1e-12);
        assert!(r.pass);
        let unbounded = Builtin::InvSqrtAbs.field().unwrap();
        assert_eq!(check_lipschitz_a2(&wg, &unbounded, &pairs).unwrap_err(), Error::MissingLinfTag);
    }
}
