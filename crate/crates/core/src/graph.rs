//! Metric graphs: construction, grid discretization, refinement and paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search;

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub label: String,
    pub coords: [f64; 3],
    pub boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub length: f64,
    pub measure: f64,
}

impl Edge {
    /// The endpoint opposite to `w`.
    pub fn other(&self, w: VertexId) -> VertexId {
        if w == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// A connected, undirected metric graph with straight edges.
///
/// `quasiconvexity` is the constant relating the graph metric to the ambient
/// metric the graph discretizes: 1 for graphs given explicitly (their metric
/// is their own length metric) and the stencil factor for grids.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    name: String,
    dim: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(VertexId, EdgeId)>>,
    quasiconvexity: f64,
}

impl MetricGraph {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        vertices: Vec<Vertex>,
        edges: Vec<Edge>,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyGraph);
        }
        if dim > 3 {
            return Err(Error::InvalidParameter(format!(
                "ambient dimension {dim} exceeds 3"
            )));
        }
        let n = vertices.len();
        let mut adjacency = vec![Vec::new(); n];
        for (id, e) in edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(Error::InvalidEdge {
                    edge: id,
                    reason: format!("endpoint out of range ({}, {})", e.u, e.v),
                });
            }
            if e.u == e.v {
                return Err(Error::InvalidEdge {
                    edge: id,
                    reason: "self-loop".into(),
                });
            }
            if !(e.length > 0.0 && e.length.is_finite()) {
                return Err(Error::NonpositiveEdgeLength {
                    edge: id,
                    length: e.length,
                });
            }
            if !(e.measure >= 0.0 && e.measure.is_finite()) {
                return Err(Error::InvalidEdge {
                    edge: id,
                    reason: format!("measure weight {} is not a nonnegative real", e.measure),
                });
            }
            adjacency[e.u].push((e.v, id));
            adjacency[e.v].push((e.u, id));
        }
        let graph = MetricGraph {
            name: name.into(),
            dim,
            vertices,
            edges,
            adjacency,
            quasiconvexity: 1.0,
        };
        graph.check_connected()?;
        Ok(graph)
    }

    fn check_connected(&self) -> Result<()> {
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(v) => Err(Error::DisconnectedGraph(v)),
            None => Ok(()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adjacency[v]
    }

    pub fn quasiconvexity(&self) -> f64 {
        self.quasiconvexity
    }

    pub fn find(&self, label: &str) -> Option<VertexId> {
        self.vertices.iter().position(|v| v.label == label)
    }

    /// Vertex closest (Euclidean) to `point`; ties go to the smaller id.
    pub fn nearest(&self, point: [f64; 3]) -> VertexId {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, v) in self.vertices.iter().enumerate() {
            let d = euclid(&v.coords, &point);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn boundary_vertices(&self) -> Vec<VertexId> {
        (0..self.vertices.len())
            .filter(|&v| self.vertices[v].boundary)
            .collect()
    }

    /// Fails with `EmptyBoundary` unless the boundary flags form a nonempty
    /// proper subset of the vertices.
    pub fn require_boundary(&self) -> Result<()> {
        let count = self.vertices.iter().filter(|v| v.boundary).count();
        if count == 0 || count == self.vertices.len() && self.vertices.len() > 1 {
            Err(Error::EmptyBoundary)
        } else {
            Ok(())
        }
    }

    pub fn total_measure(&self) -> f64 {
        self.edges.iter().map(|e| e.measure).sum()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.length).collect()
    }

    /// Graph distance `d_G` from `source` to every vertex.
    pub fn distances_from(&self, source: VertexId) -> Vec<f64> {
        search::dijkstra(self, &self.lengths(), &[(source, 0.0)], f64::INFINITY).dist
    }

    /// Graph distance to the nearest vertex of `sources`.
    pub fn distances_to_set(&self, sources: &[VertexId]) -> Vec<f64> {
        let seeds: Vec<(usize, f64)> = sources.iter().map(|&s| (s, 0.0)).collect();
        search::dijkstra(self, &self.lengths(), &seeds, f64::INFINITY).dist
    }

    pub fn distance(&self, x: VertexId, y: VertexId) -> f64 {
        self.distances_from(x)[y]
    }

    pub fn diameter_estimate(&self) -> f64 {
        search::diameter_estimate(self, &self.lengths())
    }

    /// Largest observed ratio `d_G(x, y) / |x - y|` over the given pairs.
    pub fn quasiconvexity_sample(&self, pairs: &[(VertexId, VertexId)]) -> f64 {
        let mut cache: std::collections::HashMap<usize, Vec<f64>> = Default::default();
        let mut worst: f64 = 1.0;
        for &(x, y) in pairs {
            if x == y {
                continue;
            }
            let e = euclid(&self.vertices[x].coords, &self.vertices[y].coords);
            if e <= 0.0 {
                continue;
            }
            let d = cache.entry(x).or_insert_with(|| self.distances_from(x))[y];
            worst = worst.max(d / e);
        }
        worst
    }

    fn with_quasiconvexity(mut self, c: f64) -> Self {
        self.quasiconvexity = c;
        self
    }
}

pub fn euclid(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

fn pad(coords: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, c) in out.iter_mut().zip(coords) {
        *o = *c;
    }
    out
}

/// Declarative description accepted by [`build_graph`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub name: String,
    pub dim: usize,
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub label: String,
    pub coords: Vec<f64>,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub u: VertexId,
    pub v: VertexId,
    /// Euclidean distance of the endpoints when absent.
    pub length: Option<f64>,
    /// Defaults to the edge length.
    pub measure: Option<f64>,
}

impl GraphSpec {
    pub fn vertex(&mut self, label: impl Into<String>, coords: &[f64], boundary: bool) -> VertexId {
        self.vertices.push(VertexSpec {
            label: label.into(),
            coords: coords.to_vec(),
            boundary,
        });
        self.vertices.len() - 1
    }

    pub fn edge(&mut self, u: VertexId, v: VertexId) -> EdgeId {
        self.edges.push(EdgeSpec {
            u,
            v,
            length: None,
            measure: None,
        });
        self.edges.len() - 1
    }

    pub fn edge_with_length(&mut self, u: VertexId, v: VertexId, length: f64) -> EdgeId {
        self.edges.push(EdgeSpec {
            u,
            v,
            length: Some(length),
            measure: None,
        });
        self.edges.len() - 1
    }
}

/// Validates a declarative spec into a [`MetricGraph`].
pub fn build_graph(spec: &GraphSpec) -> Result<MetricGraph> {
    let vertices: Vec<Vertex> = spec
        .vertices
        .iter()
        .map(|v| Vertex {
            label: v.label.clone(),
            coords: pad(&v.coords),
            boundary: v.boundary,
        })
        .collect();
    let n = vertices.len();
    let mut edges = Vec::with_capacity(spec.edges.len());
    for (id, e) in spec.edges.iter().enumerate() {
        if e.u >= n || e.v >= n {
            return Err(Error::InvalidEdge {
                edge: id,
                reason: format!("endpoint out of range ({}, {})", e.u, e.v),
            });
        }
        let length = e
            .length
            .unwrap_or_else(|| euclid(&vertices[e.u].coords, &vertices[e.v].coords));
        edges.push(Edge {
            u: e.u,
            v: e.v,
            length,
            measure: e.measure.unwrap_or(length),
        });
    }
    let dim = if spec.dim == 0 {
        spec.vertices.iter().map(|v| v.coords.len()).max().unwrap_or(0)
    } else {
        spec.dim
    };
    MetricGraph::new(spec.name.clone(), dim, vertices, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    Disk { center: [f64; 2], radius: f64 },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Lebesgue measure of the closed domain.
    pub fn volume(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { x0, x1, y0, y1 } => (x1 - x0) * (y1 - y0),
            Domain::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    fn distance_to_boundary(&self, p: [f64; 2]) -> f64 {
        match *self {
            Domain::Interval { a, b } => (p[0] - a).min(b - p[0]),
            Domain::Rectangle { x0, x1, y0, y1 } => {
                (p[0] - x0).min(x1 - p[0]).min(p[1] - y0).min(y1 - p[1])
            }
            Domain::Disk { center, radius } => {
                radius - ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stencil {
    Four,
    Eight,
    Sixteen,
}

impl Stencil {
    pub fn from_count(n: usize) -> Result<Self> {
        match n {
            4 => Ok(Stencil::Four),
            8 => Ok(Stencil::Eight),
            16 => Ok(Stencil::Sixteen),
            _ => Err(Error::InvalidParameter(format!(
                "stencil must be 4, 8 or 16, got {n}"
            ))),
        }
    }

    pub fn count(self) -> usize {
        match self {
            Stencil::Four => 4,
            Stencil::Eight => 8,
            Stencil::Sixteen => 16,
        }
    }

    /// One representative of each +/- direction pair.
    pub fn half_offsets(self) -> &'static [(i64, i64)] {
        match self {
            Stencil::Four => &[(1, 0), (0, 1)],
            Stencil::Eight => &[(1, 0), (0, 1), (1, 1), (1, -1)],
            Stencil::Sixteen => &[
                (1, 0),
                (0, 1),
                (1, 1),
                (1, -1),
                (2, 1),
                (1, 2),
                (2, -1),
                (1, -2),
            ],
        }
    }

    /// Worst ratio of stencil path length to Euclidean length in the plane.
    ///
    /// A direction between two adjacent stencil directions separated by angle
    /// `t` is reached by combining those two, costing at most `1/cos(t/2)`.
    pub fn quasiconvexity(self) -> f64 {
        let mut angles: Vec<f64> = self
            .half_offsets()
            .iter()
            .flat_map(|&(i, j)| {
                let a = (j as f64).atan2(i as f64);
                [a, a + std::f64::consts::PI]
            })
            .map(|a| a.rem_euclid(std::f64::consts::TAU))
            .collect();
        angles.sort_by(f64::total_cmp);
        let mut worst: f64 = 0.0;
        for k in 0..angles.len() {
            let next = if k + 1 < angles.len() {
                angles[k + 1]
            } else {
                angles[0] + std::f64::consts::TAU
            };
            worst = worst.max(next - angles[k]);
        }
        1.0 / (worst / 2.0).cos()
    }
}

/// Samples a Euclidean domain on the lattice `h Z^n`.
///
/// Vertices closer than `h` to the domain boundary carry the boundary flag.
/// Each vertex contributes a cell volume `h^n` split evenly among its incident
/// edges; the edge measures are then rescaled to sum to the domain volume.
pub fn grid_domain(domain: &Domain, h: f64, stencil: Stencil) -> Result<MetricGraph> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid spacing {h}")));
    }
    let (origin, lo, hi) = lattice_range(domain, h)?;
    let dim = domain.dim();
    let inside = |i: i64, j: i64| -> bool {
        let p = [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
        domain.distance_to_boundary(p) >= -1e-12 * h.max(1.0)
    };

    let nx = (hi[0] - lo[0] + 1) as usize;
    let ny = (hi[1] - lo[1] + 1) as usize;
    let mut index = vec![usize::MAX; nx * ny];
    let mut vertices = Vec::new();
    for j in lo[1]..=hi[1] {
        for i in lo[0]..=hi[0] {
            if !inside(i, j) {
                continue;
            }
            let p = [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
            let slot = (j - lo[1]) as usize * nx + (i - lo[0]) as usize;
            index[slot] = vertices.len();
            vertices.push(Vertex {
                label: vertices.len().to_string(),
                coords: [p[0], if dim == 1 { 0.0 } else { p[1] }, 0.0],
                boundary: domain.distance_to_boundary(p) < h * (1.0 - 1e-9),
            });
        }
    }
    if vertices.len() < 2 {
        return Err(Error::EmptyDomain);
    }

    let lookup = |i: i64, j: i64| -> Option<usize> {
        if i < lo[0] || i > hi[0] || j < lo[1] || j > hi[1] {
            return None;
        }
        let v = index[(j - lo[1]) as usize * nx + (i - lo[0]) as usize];
        (v != usize::MAX).then_some(v)
    };
    let offsets: &[(i64, i64)] = if dim == 1 {
        &[(1, 0)]
    } else {
        stencil.half_offsets()
    };
    let mut edges = Vec::new();
    for j in lo[1]..=hi[1] {
        for i in lo[0]..=hi[0] {
            let Some(a) = lookup(i, j) else { continue };
            for &(di, dj) in offsets {
                if let Some(b) = lookup(i + di, j + dj) {
                    let length = h * ((di * di + dj * dj) as f64).sqrt();
                    edges.push(Edge {
                        u: a,
                        v: b,
                        length,
                        measure: 0.0,
                    });
                }
            }
        }
    }

    let mut degree = vec![0usize; vertices.len()];
    for e in &edges {
        degree[e.u] += 1;
        degree[e.v] += 1;
    }
    let cell = h.powi(dim as i32);
    for e in edges.iter_mut() {
        e.measure = cell / degree[e.u] as f64 + cell / degree[e.v] as f64;
    }
    let total: f64 = edges.iter().map(|e| e.measure).sum();
    let scale = domain.volume() / total;
    for e in edges.iter_mut() {
        e.measure *= scale;
    }

    let name = match domain {
        Domain::Interval { .. } => "interval",
        Domain::Rectangle { .. } => "rectangle",
        Domain::Disk { .. } => "disk",
    };
    let q = if dim == 1 { 1.0 } else { stencil.quasiconvexity() };
    Ok(MetricGraph::new(name, dim, vertices, edges)?.with_quasiconvexity(q))
}

type Lattice = ([f64; 2], [i64; 2], [i64; 2]);

fn lattice_range(domain: &Domain, h: f64) -> Result<Lattice> {
    // index range covering the domain; the 1e-9 slack keeps endpoints such
    // as b = a + k h on the lattice despite rounding.
    let span = |len: f64| -> i64 { (len / h + 1e-9).floor() as i64 };
    match *domain {
        Domain::Interval { a, b } => {
            if !(b > a) {
                return Err(Error::EmptyDomain);
            }
            Ok(([a, 0.0], [0, 0], [span(b - a), 0]))
        }
        Domain::Rectangle { x0, x1, y0, y1 } => {
            if !(x1 > x0 && y1 > y0) {
                return Err(Error::EmptyDomain);
            }
            Ok(([x0, y0], [0, 0], [span(x1 - x0), span(y1 - y0)]))
        }
        Domain::Disk { center, radius } => {
            if !(radius > 0.0) {
                return Err(Error::EmptyDomain);
            }
            let k = span(radius);
            Ok((center, [-k, -k], [k, k]))
        }
    }
}

/// Splits every edge into `factor` equal sub-edges.
///
/// Original vertices keep their ids; new vertices are appended edge by edge
/// and never carry the boundary flag.
pub fn refine(graph: &MetricGraph, factor: usize) -> Result<MetricGraph> {
    if factor < 2 {
        return Err(Error::InvalidParameter(format!(
            "refinement factor must be at least 2, got {factor}"
        )));
    }
    let mut vertices = graph.vertices.clone();
    let mut edges = Vec::with_capacity(graph.edges.len() * factor);
    for (id, e) in graph.edges.iter().enumerate() {
        let a = graph.vertices[e.u].coords;
        let b = graph.vertices[e.v].coords;
        let piece = e.length / factor as f64;
        let mass = e.measure / factor as f64;
        let mut prev = e.u;
        for k in 1..factor {
            let t = k as f64 / factor as f64;
            vertices.push(Vertex {
                label: format!("e{id}.{k}"),
                coords: [
                    a[0] + t * (b[0] - a[0]),
                    a[1] + t * (b[1] - a[1]),
                    a[2] + t * (b[2] - a[2]),
                ],
                boundary: false,
            });
            let next = vertices.len() - 1;
            edges.push(Edge {
                u: prev,
                v: next,
                length: piece,
                measure: mass,
            });
            prev = next;
        }
        edges.push(Edge {
            u: prev,
            v: e.v,
            length: piece,
            measure: mass,
        });
    }
    Ok(
        MetricGraph::new(graph.name.clone(), graph.dim, vertices, edges)?
            .with_quasiconvexity(graph.quasiconvexity),
    )
}

/// One piece of a path: edge `edge` traversed from arc-length parameter
/// `from` to `to` (measured from the edge's `u` end). Orientation is
/// `from <= to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub edge: EdgeId,
    pub from: f64,
    pub to: f64,
}

impl Segment {
    pub fn forward(&self) -> bool {
        self.from <= self.to
    }

    pub fn length(&self) -> f64 {
        (self.to - self.from).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Position {
    Vertex(VertexId),
    OnEdge(EdgeId, f64),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub segments: Vec<Segment>,
}

impl Path {
    pub fn empty() -> Self {
        Path::default()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Whole-edge path following `edges` from vertex `start`.
    pub fn from_edges(graph: &MetricGraph, start: VertexId, edges: &[EdgeId]) -> Result<Self> {
        let mut at = start;
        let mut segments = Vec::with_capacity(edges.len());
        for &id in edges {
            if id >= graph.edge_count() {
                return Err(Error::InvalidPath(format!("unknown edge {id}")));
            }
            let e = graph.edge(id);
            let seg = if e.u == at {
                Segment {
                    edge: id,
                    from: 0.0,
                    to: e.length,
                }
            } else if e.v == at {
                Segment {
                    edge: id,
                    from: e.length,
                    to: 0.0,
                }
            } else {
                return Err(Error::InvalidPath(format!(
                    "edge {id} does not touch vertex {at}"
                )));
            };
            segments.push(seg);
            at = e.other(at);
        }
        Ok(Path { segments })
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    pub fn reversed(&self) -> Path {
        Path {
            segments: self
                .segments
                .iter()
                .rev()
                .map(|s| Segment {
                    edge: s.edge,
                    from: s.to,
                    to: s.from,
                })
                .collect(),
        }
    }

    pub fn concat(&self, other: &Path) -> Path {
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&other.segments);
        Path { segments }
    }

    /// First and last vertex when the path starts and ends at vertices.
    pub fn endpoints(&self, graph: &MetricGraph) -> Option<(VertexId, VertexId)> {
        let first = self.segments.first()?;
        let last = self.segments.last()?;
        match (
            position(graph, first.edge, first.from),
            position(graph, last.edge, last.to),
        ) {
            (Position::Vertex(a), Position::Vertex(b)) => Some((a, b)),
            _ => None,
        }
    }

    pub fn validate(&self, graph: &MetricGraph) -> Result<()> {
        for (k, s) in self.segments.iter().enumerate() {
            if s.edge >= graph.edge_count() {
                return Err(Error::InvalidPath(format!(
                    "segment {k}: unknown edge {}",
                    s.edge
                )));
            }
            let len = graph.edge(s.edge).length;
            let ok = |t: f64| t.is_finite() && (0.0..=len).contains(&t);
            if !ok(s.from) || !ok(s.to) {
                return Err(Error::InvalidPath(format!(
                    "segment {k}: interval [{}, {}] outside edge of length {len}",
                    s.from, s.to
                )));
            }
        }
        for (k, pair) in self.segments.windows(2).enumerate() {
            let end = position(graph, pair[0].edge, pair[0].to);
            let start = position(graph, pair[1].edge, pair[1].from);
            if end != start {
                return Err(Error::InvalidPath(format!(
                    "segments {k} and {} do not share an endpoint",
                    k + 1
                )));
            }
        }
        Ok(())
    }
}

fn position(graph: &MetricGraph, edge: EdgeId, s: f64) -> Position {
    let e = graph.edge(edge);
    if s == 0.0 {
        Position::Vertex(e.u)
    } else if s == e.length {
        Position::Vertex(e.v)
    } else {
        Position::OnEdge(edge, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segment_graph(len: f64) -> Result<MetricGraph> {
        let mut spec = GraphSpec::default();
        let a = spec.vertex("a", &[0.0], true);
        let b = spec.vertex("b", &[len], false);
        spec.edge_with_length(a, b, len);
        build_graph(&spec)
    }

    #[test]
    fn single_edge_distance_is_its_length() {
        let g = segment_graph(1.0).unwrap();
        assert_eq!(g.distance(0, 1), 1.0);
    }

    #[test]
    fn zero_length_edge_rejected() {
        assert!(matches!(
            segment_graph(0.0),
            Err(Error::NonpositiveEdgeLength { edge: 0, .. })
        ));
    }

    #[test]
    fn disconnected_graph_rejected() {
        let mut spec = GraphSpec::default();
        let a = spec.vertex("a", &[0.0], true);
        let b = spec.vertex("b", &[1.0], false);
        spec.vertex("c", &[5.0], false);
        spec.edge(a, b);
        assert_eq!(build_graph(&spec).unwrap_err(), Error::DisconnectedGraph(2));
    }

    #[test]
    fn boundary_requirement() {
        let mut spec = GraphSpec::default();
        let a = spec.vertex("a", &[0.0], false);
        let b = spec.vertex("b", &[1.0], false);
        spec.edge(a, b);
        let g = build_graph(&spec).unwrap();
        assert_eq!(g.require_boundary(), Err(Error::EmptyBoundary));
    }

    #[test]
    fn interval_grid_counts() {
        let g = grid_domain(&Domain::Interval { a: -1.0, b: 1.0 }, 0.25, Stencil::Four).unwrap();
        assert_eq!(g.vertex_count(), 9);
        assert_eq!(g.edge_count(), 8);
        let boundary: Vec<f64> = g
            .boundary_vertices()
            .iter()
            .map(|&v| g.vertex(v).coords[0])
            .collect();
        assert_eq!(boundary, vec![-1.0, 1.0]);
        assert!((g.total_measure() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn disk_grid_geometry() {
        let disk = Domain::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        let g = grid_domain(&disk, 0.5, Stencil::Eight).unwrap();
        for v in g.vertices() {
            assert!(euclid(&v.coords, &[0.0; 3]) <= 1.0 + 1e-12);
        }
        let diag: Vec<&Edge> = g
            .edges()
            .iter()
            .filter(|e| {
                let a = g.vertex(e.u).coords;
                let b = g.vertex(e.v).coords;
                a[0] != b[0] && a[1] != b[1]
            })
            .collect();
        assert!(!diag.is_empty());
        for e in diag {
            assert!((e.length - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        }
        assert!((g.total_measure() - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn stencil_factors_match_direction_brute_force() {
        // brute force: for each direction, the cheapest nonnegative combination
        // of the two stencil vectors bracketing it.
        for stencil in [Stencil::Four, Stencil::Eight, Stencil::Sixteen] {
            let dirs: Vec<(f64, f64)> = stencil
                .half_offsets()
                .iter()
                .flat_map(|&(i, j)| [(i as f64, j as f64), (-i as f64, -j as f64)])
                .collect();
            let mut worst: f64 = 1.0;
            for k in 0..20_000 {
                let t = std::f64::consts::TAU * k as f64 / 20_000.0;
                let target = (t.cos(), t.sin());
                let mut best = f64::INFINITY;
                for a in &dirs {
                    for b in &dirs {
                        let det = a.0 * b.1 - a.1 * b.0;
                        if det.abs() < 1e-12 {
                            let la = (a.0 * a.0 + a.1 * a.1).sqrt();
                            let cos = (a.0 * target.0 + a.1 * target.1) / la;
                            if (cos - 1.0).abs() < 1e-12 {
                                best = best.min(1.0);
                            }
                            continue;
                        }
                        let p = (target.0 * b.1 - target.1 * b.0) / det;
                        let q = (a.0 * target.1 - a.1 * target.0) / det;
                        if p >= -1e-12 && q >= -1e-12 {
                            let cost = p * (a.0 * a.0 + a.1 * a.1).sqrt()
                                + q * (b.0 * b.0 + b.1 * b.1).sqrt();
                            best = best.min(cost);
                        }
                    }
                }
                worst = worst.max(best);
            }
            assert!((worst - stencil.quasiconvexity()).abs() < 1e-6, "{stencil:?}");
        }
        assert!(Stencil::Sixteen.quasiconvexity() <= 1.03);
    }

    #[test]
    fn sixteen_stencil_disk_metric_close_to_euclidean() {
        let disk = Domain::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        let g = grid_domain(&disk, 0.1, Stencil::Sixteen).unwrap();
        let center = g.nearest([0.0; 3]);
        let pairs: Vec<(usize, usize)> = (0..g.vertex_count()).map(|v| (center, v)).collect();
        let c = g.quasiconvexity_sample(&pairs);
        assert!(c <= 1.03, "{c}");
    }

    #[test]
    fn refine_preserves_metric_and_measure() {
        let g = segment_graph(1.0).unwrap();
        let r = refine(&g, 2).unwrap();
        assert_eq!(r.edge_count(), 2);
        assert!(r.edges().iter().all(|e| e.length == 0.5));
        assert_eq!(r.distance(0, 1), 1.0);

        let disk = Domain::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        let g = grid_domain(&disk, 0.25, Stencil::Eight).unwrap();
        let r = refine(&g, 3).unwrap();
        assert!((r.total_measure() - g.total_measure()).abs() < 1e-12);
        let d0 = g.distances_from(0);
        let d1 = r.distances_from(0);
        for v in 0..g.vertex_count() {
            assert!((d0[v] - d1[v]).abs() < 1e-12);
        }
        assert!(refine(&g, 1).is_err());
    }

    #[test]
    fn path_validation() {
        let mut spec = GraphSpec::default();
        let a = spec.vertex("a", &[0.0], true);
        let b = spec.vertex("b", &[1.0], false);
        let c = spec.vertex("c", &[2.0], false);
        spec.edge(a, b);
        spec.edge(b, c);
        let g = build_graph(&spec).unwrap();
        let p = Path::from_edges(&g, a, &[0, 1]).unwrap();
        p.validate(&g).unwrap();
        assert_eq!(p.endpoints(&g), Some((a, c)));
        assert_eq!(p.reversed().endpoints(&g), Some((c, a)));
        assert_eq!(p.length(), 2.0);
        let broken = Path {
            segments: vec![
                Segment {
                    edge: 0,
                    from: 0.0,
                    to: 0.5,
                },
                Segment {
                    edge: 1,
                    from: 0.0,
                    to: 1.0,
                },
            ],
        };
        assert!(matches!(broken.validate(&g), Err(Error::InvalidPath(_))));
        assert!(Path::from_edges(&g, c, &[0]).is_err());
    }
}
