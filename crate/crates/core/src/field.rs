//! The running cost `f`: an arc-length evaluator on edges with a positive
//! lower bound and an integrability declaration.

use std::fmt;
use std::sync::Arc;

use evalexpr::{ContextWithMutableVariables, HashMapContext, Node, Value};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph};

/// Geometry of one edge as seen by an evaluator.
#[derive(Debug, Clone, Copy)]
pub struct EdgeRef<'a> {
    pub id: EdgeId,
    pub a: &'a [f64; 3],
    pub b: &'a [f64; 3],
    pub length: f64,
}

impl<'a> EdgeRef<'a> {
    pub fn of(graph: &'a MetricGraph, id: EdgeId) -> Self {
        let e = graph.edge(id);
        EdgeRef {
            id,
            a: &graph.vertex(e.u).coords,
            b: &graph.vertex(e.v).coords,
            length: e.length,
        }
    }

    /// Ambient point at arc-length `s` from the `a` end.
    pub fn point(&self, s: f64) -> [f64; 3] {
        let t = s / self.length;
        [
            self.a[0] + t * (self.b[0] - self.a[0]),
            self.a[1] + t * (self.b[1] - self.a[1]),
            self.a[2] + t * (self.b[2] - self.a[2]),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrability {
    /// `f` in L^p for the given exponent.
    Lp(f64),
    /// `f` essentially bounded by the given value.
    Linf(f64),
    Unspecified,
}

type Evaluator = dyn Fn(&EdgeRef<'_>, f64) -> f64 + Send + Sync;

/// Deterministic evaluator `f(e, s)` with values in `(0, +inf]`.
///
/// A NaN from the evaluator is read as `+inf`.
#[derive(Clone)]
pub struct WeightField {
    eval: Arc<Evaluator>,
    alpha: f64,
    integrability: Integrability,
    description: String,
}

impl fmt::Debug for WeightField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightField")
            .field("description", &self.description)
            .field("alpha", &self.alpha)
            .field("integrability", &self.integrability)
            .finish()
    }
}

impl WeightField {
    pub fn new<F>(
        description: impl Into<String>,
        alpha: f64,
        integrability: Integrability,
        eval: F,
    ) -> Result<Self>
    where
        F: Fn(&EdgeRef<'_>, f64) -> f64 + Send + Sync + 'static,
    {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lower bound alpha must be positive, got {alpha}"
            )));
        }
        Ok(WeightField {
            eval: Arc::new(eval),
            alpha,
            integrability,
            description: description.into(),
        })
    }

    /// Field given by a function of the ambient point.
    pub fn pointwise<F>(
        description: impl Into<String>,
        alpha: f64,
        integrability: Integrability,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64; 3]) -> f64 + Send + Sync + 'static,
    {
        WeightField::new(description, alpha, integrability, move |e, s| f(&e.point(s)))
    }

    pub fn constant(c: f64) -> Result<Self> {
        WeightField::new(format!("constant {c}"), c, Integrability::Linf(c), move |_, _| c)
    }

    /// Piecewise constant: one value per edge id.
    pub fn per_edge(values: Vec<f64>) -> Result<Self> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(0.0, f64::max);
        let tag = if hi.is_finite() {
            Integrability::Linf(hi)
        } else {
            Integrability::Unspecified
        };
        WeightField::new("per-edge constant", lo, tag, move |e, _| values[e.id])
    }

    pub fn eval(&self, edge: &EdgeRef<'_>, s: f64) -> f64 {
        let v = (self.eval)(edge, s);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn integrability(&self) -> Integrability {
        self.integrability
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn linf_bound(&self) -> Option<f64> {
        match self.integrability {
            Integrability::Linf(m) => Some(m),
            _ => None,
        }
    }

    pub fn with_integrability(mut self, tag: Integrability) -> Self {
        self.integrability = tag;
        self
    }

    /// `min(f, m)`; `m = +inf` returns an identical field.
    pub fn truncated(&self, m: f64) -> WeightField {
        if m == f64::INFINITY {
            return self.clone();
        }
        let inner = Arc::clone(&self.eval);
        let bound = match self.integrability {
            Integrability::Linf(b) => b.min(m),
            _ => m,
        };
        WeightField {
            eval: Arc::new(move |e, s| {
                let v = inner(e, s);
                if v.is_nan() {
                    m
                } else {
                    v.min(m)
                }
            }),
            alpha: self.alpha.min(m),
            integrability: Integrability::Linf(bound),
            description: format!("min({}, {m})", self.description),
        }
    }

    /// `c f` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<WeightField> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor {c}")));
        }
        let inner = Arc::clone(&self.eval);
        let integrability = match self.integrability {
            Integrability::Linf(b) => Integrability::Linf(c * b),
            other => other,
        };
        Ok(WeightField {
            eval: Arc::new(move |e, s| c * inner(e, s)),
            alpha: c * self.alpha,
            integrability,
            description: format!("{c} * ({})", self.description),
        })
    }

    /// Samples `samples_per_edge` interior points of every edge and returns
    /// those where `f < alpha`.
    pub fn lower_bound_violations(
        &self,
        graph: &MetricGraph,
        samples_per_edge: usize,
    ) -> Vec<(EdgeId, f64, f64)> {
        let mut out = Vec::new();
        for id in 0..graph.edge_count() {
            let e = EdgeRef::of(graph, id);
            for k in 0..samples_per_edge {
                let s = e.length * (k as f64 + 0.5) / samples_per_edge as f64;
                let v = self.eval(&e, s);
                if v < self.alpha {
                    out.push((id, s, v));
                }
            }
        }
        out
    }
}

/// Named fields used by the shipped scenarios and accepted in scenario files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    Constant(f64),
    /// `1/sqrt(|x1|)`.
    InvSqrtAbs,
    /// `1/|x1|`.
    InvAbs,
    /// `1/x1` above the axis, 1 on it.
    Comb,
    /// `1/sqrt(x1)` on the positive `x1` axis, `1/|x|` elsewhere.
    PuncturedDisk,
    /// On the unit circle by angle: `1/pi` for `theta in [0, pi]`,
    /// `1/(theta + pi)` for `theta in (-pi, 0)`.
    CircleLog,
}

impl Builtin {
    pub fn from_name(name: &str, value: Option<f64>) -> Result<Self> {
        Ok(match name {
            "constant" => Builtin::Constant(value.ok_or_else(|| {
                Error::Parse("builtin 'constant' needs a \"value\" field".into())
            })?),
            "inv_sqrt_abs" => Builtin::InvSqrtAbs,
            "inv_abs" => Builtin::InvAbs,
            "comb" => Builtin::Comb,
            "punctured_disk" => Builtin::PuncturedDisk,
            "circle_log" => Builtin::CircleLog,
            other => return Err(Error::Parse(format!("unknown builtin field '{other}'"))),
        })
    }

    /// Lower bounds hold on the domains the builtins are used on (the unit
    /// interval, square or disk).
    pub fn field(self) -> Result<WeightField> {
        use std::f64::consts::PI;
        match self {
            Builtin::Constant(c) => WeightField::constant(c),
            Builtin::InvSqrtAbs => WeightField::pointwise(
                "1/sqrt|x|",
                1.0,
                Integrability::Lp(1.9),
                |p| 1.0 / p[0].abs().sqrt(),
            ),
            Builtin::InvAbs => WeightField::pointwise(
                "1/|x|",
                1.0,
                Integrability::Unspecified,
                |p| 1.0 / p[0].abs(),
            ),
            Builtin::Comb => {
                WeightField::pointwise("comb", 1.0, Integrability::Unspecified, |p| {
                    if p[1] > 0.0 {
                        1.0 / p[0]
                    } else {
                        1.0
                    }
                })
            }
            Builtin::PuncturedDisk => WeightField::pointwise(
                "punctured disk",
                1.0,
                Integrability::Lp(1.9),
                |p| {
                    if p[1] == 0.0 && p[0] > 0.0 {
                        1.0 / p[0].sqrt()
                    } else {
                        1.0 / (p[0] * p[0] + p[1] * p[1]).sqrt()
                    }
                },
            ),
            Builtin::CircleLog => WeightField::new(
                "circle log",
                1.0 / PI,
                Integrability::Unspecified,
                |e, s| {
                    let theta = arc_angle(e, s);
                    if theta >= 0.0 {
                        1.0 / PI
                    } else {
                        1.0 / (theta + PI)
                    }
                },
            ),
        }
    }
}

/// Angle in `(-pi, pi]` at arc-length `s` along an edge whose endpoints sit
/// on the unit circle, interpolating along the shorter arc.
pub fn arc_angle(e: &EdgeRef<'_>, s: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let ta = e.a[1].atan2(e.a[0]);
    let mut tb = e.b[1].atan2(e.b[0]);
    if tb - ta > PI {
        tb -= TAU;
    } else if ta - tb > PI {
        tb += TAU;
    }
    let t = ta + (tb - ta) * s / e.length;
    if t > PI {
        t - TAU
    } else if t <= -PI {
        t + TAU
    } else {
        t
    }
}

/// Field given by an arithmetic expression in `x`, `y`, `z` and `r = |p|`,
/// using evalexpr syntax (`math::sqrt`, `math::abs`, `if(c, a, b)`, ...).
pub fn expression_field(
    expr: &str,
    alpha: f64,
    integrability: Integrability,
) -> Result<WeightField> {
    let tree: Node = evalexpr::build_operator_tree(expr)
        .map_err(|e| Error::Parse(format!("expression '{expr}': {e}")))?;
    let probe = evaluate(&tree, &[0.5, 0.5, 0.5]);
    if let Err(msg) = probe {
        return Err(Error::Parse(format!("expression '{expr}': {msg}")));
    }
    WeightField::pointwise(expr.to_string(), alpha, integrability, move |p| {
        evaluate(&tree, p).unwrap_or(f64::NAN)
    })
}

fn evaluate(tree: &Node, p: &[f64; 3]) -> std::result::Result<f64, String> {
    let mut ctx = HashMapContext::new();
    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    for (name, v) in [("x", p[0]), ("y", p[1]), ("z", p[2]), ("r", r)] {
        ctx.set_value(name.into(), Value::Float(v))
            .map_err(|e| e.to_string())?;
    }
    match tree.eval_with_context(&ctx).map_err(|e| e.to_string())? {
        Value::Float(v) => Ok(v),
        Value::Int(v) => Ok(v as f64),
        other => Err(format!("expression produced non-numeric value {other}")),
    }
}
