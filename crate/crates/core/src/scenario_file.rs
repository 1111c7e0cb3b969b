//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "square",
//!   "grid": {"domain": {"rectangle": {"x0": 0, "x1": 1, "y0": 0, "y1": 1}}, "h": 0.05, "stencil": 4},
//!   "f": {"kind": "expression", "expr": "1 + x", "alpha": 1},
//!   "g": [{"all_boundary": true, "value": 0}],
//!   "null_sets": [{"name": "wall", "blocked_edges": [[[0.5, 0.0], [0.5, 0.05]]], "passable_vertices": []}]
//! }
//! ```
//!
//! Explicit graphs use `"graph": {"vertices": [{"id", "xy", "boundary"}],
//! "edges": [{"u", "v", "length", "measure"}]}`. A vertex reference is an id
//! (string or integer) or a coordinate array, resolved to the nearest vertex.
//! An edge reference is an edge index or a pair of vertex references.

use std::collections::HashMap;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::field::{expression_field, Builtin, Integrability, WeightField};
use crate::graph::{build_graph, grid_domain, Domain, GraphSpec, MetricGraph, Stencil, VertexId};
use crate::scenarios::Setup;
use crate::transversal::NullSetMarking;

fn err(at: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{at}: {msg}"))
}

fn field<'a>(obj: &'a Map<String, Value>, at: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| err(at, format!("missing field \"{key}\"")))
}

fn object<'a>(v: &'a Value, at: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| err(at, "expected an object"))
}

fn array<'a>(v: &'a Value, at: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| err(at, "expected an array"))
}

fn number(v: &Value, at: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| err(at, "expected a number"))
}

fn opt_number(obj: &Map<String, Value>, at: &str, key: &str) -> Result<Option<f64>> {
    obj.get(key)
        .map(|v| number(v, &format!("{at}.{key}")))
        .transpose()
}

fn point(v: &Value, at: &str) -> Result<[f64; 3]> {
    let a = array(v, at)?;
    if a.is_empty() || a.len() > 3 {
        return Err(err(at, "coordinates need 1 to 3 components"));
    }
    let mut p = [0.0; 3];
    for (i, c) in a.iter().enumerate() {
        p[i] = number(c, &format!("{at}[{i}]"))?;
    }
    Ok(p)
}

fn id_key(v: &Value, at: &str) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) if n.is_u64() => Ok(n.to_string()),
        _ => Err(err(at, "vertex id must be a string or a non-negative integer")),
    }
}

struct Resolver<'g> {
    graph: &'g MetricGraph,
    ids: HashMap<String, VertexId>,
}

impl<'g> Resolver<'g> {
    fn new(graph: &'g MetricGraph) -> Self {
        let ids = graph
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, v)| (v.label.clone(), i))
            .collect();
        Resolver { graph, ids }
    }

    fn vertex(&self, v: &Value, at: &str) -> Result<VertexId> {
        if v.is_array() {
            return Ok(self.graph.nearest(point(v, at)?));
        }
        let key = id_key(v, at)?;
        self.ids
            .get(&key)
            .copied()
            .ok_or_else(|| err(at, format!("unknown vertex \"{key}\"")))
    }

    fn edge(&self, v: &Value, at: &str) -> Result<usize> {
        if let Some(i) = v.as_u64() {
            let i = i as usize;
            if i >= self.graph.edge_count() {
                return Err(err(at, format!("edge index {i} out of range")));
            }
            return Ok(i);
        }
        let pair = array(v, at)?;
        if pair.len() != 2 {
            return Err(err(at, "edge reference must be an index or a pair of vertices"));
        }
        let a = self.vertex(&pair[0], &format!("{at}[0]"))?;
        let b = self.vertex(&pair[1], &format!("{at}[1]"))?;
        self.graph
            .neighbors(a)
            .iter()
            .find(|(w, _)| *w == b)
            .map(|&(_, e)| e)
            .ok_or_else(|| err(at, format!("no edge between vertices {a} and {b}")))
    }
}

fn explicit_graph(name: &str, v: &Value) -> Result<MetricGraph> {
    let obj = object(v, "graph")?;
    let vertices = array(field(obj, "graph", "vertices")?, "graph.vertices")?;
    let edges = array(field(obj, "graph", "edges")?, "graph.edges")?;
    let mut spec = GraphSpec {
        name: name.into(),
        ..GraphSpec::default()
    };
    let mut ids = HashMap::new();
    for (i, vv) in vertices.iter().enumerate() {
        let at = format!("graph.vertices[{i}]");
        let o = object(vv, &at)?;
        let id = id_key(field(o, &at, "id")?, &format!("{at}.id"))?;
        let xy = array(field(o, &at, "xy")?, &format!("{at}.xy"))?;
        let coords = xy
            .iter()
            .enumerate()
            .map(|(k, c)| number(c, &format!("{at}.xy[{k}]")))
            .collect::<Result<Vec<f64>>>()?;
        if coords.is_empty() || coords.len() > 3 {
            return Err(err(&format!("{at}.xy"), "coordinates need 1 to 3 components"));
        }
        let boundary = match o.get("boundary") {
            None => false,
            Some(b) => b
                .as_bool()
                .ok_or_else(|| err(&format!("{at}.boundary"), "expected true or false"))?,
        };
        if ids.insert(id.clone(), i).is_some() {
            return Err(err(&format!("{at}.id"), format!("duplicate vertex id \"{id}\"")));
        }
        spec.vertex(id, &coords, boundary);
    }
    for (i, ev) in edges.iter().enumerate() {
        let at = format!("graph.edges[{i}]");
        let o = object(ev, &at)?;
        let end = |key: &str| -> Result<VertexId> {
            let k = id_key(field(o, &at, key)?, &format!("{at}.{key}"))?;
            ids.get(&k)
                .copied()
                .ok_or_else(|| err(&format!("{at}.{key}"), format!("unknown vertex \"{k}\"")))
        };
        let (u, w) = (end("u")?, end("v")?);
        let e = spec.edge(u, w);
        spec.edges[e].length = opt_number(o, &at, "length")?;
        spec.edges[e].measure = opt_number(o, &at, "measure")?;
    }
    build_graph(&spec).map_err(|e| match e {
        Error::InvalidEdge { edge, reason } => err(&format!("graph.edges[{edge}]"), reason),
        Error::NonpositiveEdgeLength { edge, length } => err(
            &format!("graph.edges[{edge}].length"),
            format!("length must be positive, got {length}"),
        ),
        other => err("graph", other),
    })
}

fn grid_graph(v: &Value) -> Result<MetricGraph> {
    let obj = object(v, "grid")?;
    let domain: Domain = serde_json::from_value(field(obj, "grid", "domain")?.clone())
        .map_err(|e| err("grid.domain", e))?;
    let h = number(field(obj, "grid", "h")?, "grid.h")?;
    let stencil = match obj.get("stencil") {
        None => Stencil::Four,
        Some(s) => {
            let n = s
                .as_u64()
                .ok_or_else(|| err("grid.stencil", "expected 4, 8 or 16"))?;
            Stencil::from_count(n as usize).map_err(|e| err("grid.stencil", e))?
        }
    };
    grid_domain(&domain, h, stencil).map_err(|e| err("grid", e))
}

fn weight_field(v: &Value) -> Result<WeightField> {
    let obj = object(v, "f")?;
    let kind = field(obj, "f", "kind")?
        .as_str()
        .ok_or_else(|| err("f.kind", "expected a string"))?;
    match kind {
        "builtin" => {
            let name = field(obj, "f", "name")?
                .as_str()
                .ok_or_else(|| err("f.name", "expected a string"))?;
            let value = opt_number(obj, "f", "value")?;
            Builtin::from_name(name, value)
                .and_then(Builtin::field)
                .map_err(|e| err("f", e))
        }
        "expression" => {
            let expr = field(obj, "f", "expr")?
                .as_str()
                .ok_or_else(|| err("f.expr", "expected a string"))?;
            let alpha = number(field(obj, "f", "alpha")?, "f.alpha")?;
            let tag = match obj.get("integrability") {
                None => Integrability::Unspecified,
                Some(t) => serde_json::from_value(t.clone()).map_err(|e| err("f.integrability", e))?,
            };
            expression_field(expr, alpha, tag).map_err(|e| err("f.expr", e))
        }
        other => Err(err("f.kind", format!("expected \"builtin\" or \"expression\", got \"{other}\""))),
    }
}

fn boundary_data(v: Option<&Value>, graph: &MetricGraph, r: &Resolver<'_>) -> Result<Vec<(VertexId, f64)>> {
    let Some(v) = v else {
        return Ok(graph.boundary_vertices().into_iter().map(|b| (b, 0.0)).collect());
    };
    let mut out: Vec<(VertexId, f64)> = Vec::new();
    for (i, entry) in array(v, "g")?.iter().enumerate() {
        let at = format!("g[{i}]");
        let o = object(entry, &at)?;
        let value = number(field(o, &at, "value")?, &format!("{at}.value"))?;
        let targets = if o.get("all_boundary").and_then(Value::as_bool) == Some(true) {
            graph.boundary_vertices()
        } else if let Some(vr) = o.get("vertex") {
            vec![r.vertex(vr, &format!("{at}.vertex"))?]
        } else if let Some(p) = o.get("at") {
            vec![r.vertex(p, &format!("{at}.at"))?]
        } else {
            return Err(err(&at, "needs one of \"vertex\", \"at\" or \"all_boundary\""));
        };
        for t in targets {
            if !graph.vertex(t).boundary {
                return Err(err(&at, format!("vertex {t} is not flagged as boundary")));
            }
            match out.iter_mut().find(|(w, _)| *w == t) {
                Some(slot) => slot.1 = value,
                None => out.push((t, value)),
            }
        }
    }
    out.sort_by_key(|&(v, _)| v);
    Ok(out)
}

pub fn parse_markings(v: &Value, at: &str, graph: &MetricGraph) -> Result<Vec<NullSetMarking>> {
    let r = Resolver::new(graph);
    markings(v, at, &r)
}

fn markings(v: &Value, at: &str, r: &Resolver<'_>) -> Result<Vec<NullSetMarking>> {
    let mut out = Vec::new();
    for (i, m) in array(v, at)?.iter().enumerate() {
        let at = format!("{at}[{i}]");
        let o = object(m, &at)?;
        let name = match o.get("name") {
            Some(n) => n
                .as_str()
                .ok_or_else(|| err(&format!("{at}.name"), "expected a string"))?
                .to_string(),
            None => format!("marking {i}"),
        };
        let blocked = array(field(o, &at, "blocked_edges")?, &format!("{at}.blocked_edges"))?
            .iter()
            .enumerate()
            .map(|(k, e)| r.edge(e, &format!("{at}.blocked_edges[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        let passable = match o.get("passable_vertices") {
            None => Vec::new(),
            Some(p) => array(p, &format!("{at}.passable_vertices"))?
                .iter()
                .enumerate()
                .map(|(k, v)| r.vertex(v, &format!("{at}.passable_vertices[{k}]")))
                .collect::<Result<Vec<_>>>()?,
        };
        let marking = NullSetMarking::new(name, blocked, passable);
        marking.validate(r.graph).map_err(|e| err(&at, e))?;
        out.push(marking);
    }
    Ok(out)
}

/// Parses scenario JSON text into a [`Setup`].
pub fn parse_scenario(text: &str) -> Result<Setup> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let obj = object(&root, "scenario")?;
    let name = field(obj, "scenario", "name")?
        .as_str()
        .ok_or_else(|| err("name", "expected a string"))?
        .to_string();
    let graph = match (obj.get("graph"), obj.get("grid")) {
        (Some(g), None) => explicit_graph(&name, g)?,
        (None, Some(g)) => grid_graph(g)?,
        (Some(_), Some(_)) => return Err(err("scenario", "give either \"graph\" or \"grid\", not both")),
        (None, None) => return Err(err("scenario", "missing field \"graph\" (or \"grid\")")),
    };
    let f = weight_field(field(obj, "scenario", "f")?)?;
    let resolver = Resolver::new(&graph);
    let boundary = boundary_data(obj.get("g"), &graph, &resolver)?;
    if boundary.is_empty() {
        return Err(err("g", "no boundary data; flag at least one vertex as boundary"));
    }
    let null_sets = match obj.get("null_sets") {
        Some(v) => markings(v, "null_sets", &resolver)?,
        None => Vec::new(),
    };
    let center = match obj.get("center") {
        Some(c) => resolver.vertex(c, "center")?,
        None => {
            let n = graph.vertex_count() as f64;
            let mut c = [0.0; 3];
            for v in graph.vertices() {
                for k in 0..3 {
                    c[k] += v.coords[k] / n;
                }
            }
            graph.nearest(c)
        }
    };
    Ok(Setup {
        name,
        graph,
        f,
        boundary,
        null_sets,
        center,
    })
}

pub fn load_scenario_file(path: &Path) -> Result<Setup> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PATH3: &str = r#"{
        "name": "path",
        "graph": {
            "vertices": [
                {"id": "a", "xy": [0, 0], "boundary": true},
                {"id": "b", "xy": [1, 0]},
                {"id": "c", "xy": [2, 0], "boundary": true}
            ],
            "edges": [{"u": "a", "v": "b"}, {"u": "b", "v": "c", "length": 3, "measure": 1}]
        },
        "f": {"kind": "builtin", "name": "constant", "value": 2},
        "g": [{"vertex": "a", "value": 0}, {"at": [2, 0], "value": 1}]
    }"#;

    #[test]
    fn explicit_graph_file() {
        let s = parse_scenario(PATH3).unwrap();
        assert_eq!(s.graph.vertex_count(), 3);
        assert_eq!(s.graph.edge(1).length, 3.0);
        assert_eq!(s.graph.edge(1).measure, 1.0);
        assert_eq!(s.boundary, vec![(0, 0.0), (2, 1.0)]);
        assert_eq!(s.center, 1);
    }

    #[test]
    fn missing_edges_names_the_field() {
        let text = PATH3.replace("\"edges\"", "\"edgez\"");
        let e = parse_scenario(&text).unwrap_err().to_string();
        assert!(e.contains("\"edges\"") && e.contains("graph"), "{e}");
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse_scenario("{\n \"name\": 1,").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        let bad = PATH3.replace("{\"u\": \"b\", \"v\": \"c\"", "{\"u\": \"b\", \"v\": \"zz\"");
        let e = parse_scenario(&bad).unwrap_err().to_string();
        assert!(e.contains("graph.edges[1].v") && e.contains("zz"), "{e}");
        let bad = PATH3.replace("\"value\": 2}", "\"value\": 2, \"kind\": \"magic\"}");
        assert!(parse_scenario(&bad).is_err());
        let bad = PATH3.replace("{\"vertex\": \"a\", \"value\": 0}", "{\"vertex\": \"b\", \"value\": 0}");
        let e = parse_scenario(&bad).unwrap_err().to_string();
        assert!(e.contains("g[0]"), "{e}");
    }

    #[test]
    fn grid_file_with_markings() {
        let text = r#"{
            "name": "walled",
            "grid": {"domain": {"rectangle": {"x0": 0, "x1": 1, "y0": 0, "y1": 1}}, "h": 0.5, "stencil": 4},
            "f": {"kind": "expression", "expr": "1 + x", "alpha": 1, "integrability": {"linf": 2}},
            "g": [{"all_boundary": true, "value": 0}],
            "null_sets": [{"name": "w", "blocked_edges": [[[0.5, 0], [0.5, 0.5]]], "passable_vertices": [[0.5, 1]]}]
        }"#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.graph.vertex_count(), 9);
        assert_eq!(s.boundary.len(), 8);
        assert_eq!(s.f.linf_bound(), Some(2.0));
        assert_eq!(s.null_sets[0].blocked_edges.len(), 1);
        assert_eq!(s.center, s.graph.nearest([0.5, 0.5, 0.0]));
    }

    #[test]
    fn unreadable_file() {
        let e = load_scenario_file(Path::new("/nonexistent/x.json")).unwrap_err();
        assert!(matches!(e, Error::Io(_)));
    }
}
