//! Finite metric graphs, trace ordering and sampled functions on edges.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::{CVector, ZERO};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalEdge {
    pub id: String,
    pub initial: String,
    pub terminal: String,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalEdge {
    pub id: String,
    pub initial: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeRef {
    External(usize),
    Internal(usize),
}

/// Which end of an edge a trace slot sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Initial,
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceSlot {
    pub edge: EdgeRef,
    pub endpoint: Endpoint,
}

/// A finite metric graph with internal edges `[0, a_i]` and external
/// half-lines `[0, inf)`. Deserialise through `problem::GraphSpec`, which
/// validates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricGraph {
    vertices: Vec<String>,
    internal: Vec<InternalEdge>,
    external: Vec<ExternalEdge>,
}

impl MetricGraph {
    pub fn new(vertices: Vec<String>, internal: Vec<InternalEdge>, external: Vec<ExternalEdge>) -> Result<Self> {
        if internal.is_empty() && external.is_empty() {
            return Err(Error::InvalidGraph("graph has no edges".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for v in &vertices {
            if !seen.insert(v.as_str()) {
                return Err(Error::InvalidGraph(format!("duplicate vertex {v}")));
            }
        }
        let has = |v: &str| vertices.iter().any(|w| w == v);
        let mut ids = std::collections::HashSet::new();
        for e in &internal {
            if !ids.insert(e.id.as_str()) {
                return Err(Error::InvalidGraph(format!("duplicate edge id {}", e.id)));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::InvalidGraph(format!("edge {} has non-positive length {}", e.id, e.length)));
            }
            for v in [&e.initial, &e.terminal] {
                if !has(v) {
                    return Err(Error::InvalidGraph(format!("edge {} refers to unknown vertex {v}", e.id)));
                }
            }
        }
        for e in &external {
            if !ids.insert(e.id.as_str()) {
                return Err(Error::InvalidGraph(format!("duplicate edge id {}", e.id)));
            }
            if !has(&e.initial) {
                return Err(Error::InvalidGraph(format!("edge {} refers to unknown vertex {}", e.id, e.initial)));
            }
        }
        Ok(Self { vertices, internal, external })
    }

    /// The interval `[0, a]`.
    pub fn interval(a: f64) -> Result<Self> {
        Self::new(
            vec!["v0".into(), "v1".into()],
            vec![InternalEdge { id: "i1".into(), initial: "v0".into(), terminal: "v1".into(), length: a }],
            vec![],
        )
    }

    /// `n` half-lines glued at one vertex.
    pub fn star(n: usize) -> Result<Self> {
        Self::new(
            vec!["v0".into()],
            vec![],
            (1..=n).map(|i| ExternalEdge { id: format!("e{i}"), initial: "v0".into() }).collect(),
        )
    }

    /// One loop of length `a` and two half-lines at the same vertex.
    pub fn lasso(a: f64) -> Result<Self> {
        Self::new(
            vec!["v0".into()],
            vec![InternalEdge { id: "i1".into(), initial: "v0".into(), terminal: "v0".into(), length: a }],
            vec![
                ExternalEdge { id: "e1".into(), initial: "v0".into() },
                ExternalEdge { id: "e2".into(), initial: "v0".into() },
            ],
        )
    }

    /// `n` parallel edges of length `a` between two vertices.
    pub fn pumpkin(n: usize, a: f64) -> Result<Self> {
        Self::new(
            vec!["v0".into(), "v1".into()],
            (1..=n)
                .map(|i| InternalEdge { id: format!("i{i}"), initial: "v0".into(), terminal: "v1".into(), length: a })
                .collect(),
            vec![],
        )
    }

    /// A half-line attached to one end of an interval `[0, a]`.
    pub fn half_line_with_interval(a: f64) -> Result<Self> {
        Self::new(
            vec!["v0".into(), "v1".into()],
            vec![InternalEdge { id: "i1".into(), initial: "v0".into(), terminal: "v1".into(), length: a }],
            vec![ExternalEdge { id: "e1".into(), initial: "v0".into() }],
        )
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn internal_edges(&self) -> &[InternalEdge] {
        &self.internal
    }

    pub fn external_edges(&self) -> &[ExternalEdge] {
        &self.external
    }

    pub fn n_internal(&self) -> usize {
        self.internal.len()
    }

    pub fn n_external(&self) -> usize {
        self.external.len()
    }

    /// `d = |E| + 2|I|`.
    pub fn deficiency_index(&self) -> usize {
        self.external.len() + 2 * self.internal.len()
    }

    pub fn is_star(&self) -> bool {
        self.internal.is_empty()
    }

    pub fn is_compact(&self) -> bool {
        self.external.is_empty()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.internal.iter().map(|e| e.length).collect()
    }

    /// Shortest internal edge, or 1 when there are none.
    pub fn a_min(&self) -> f64 {
        let m = self.internal.iter().map(|e| e.length).fold(f64::INFINITY, f64::min);
        if m.is_finite() {
            m
        } else {
            1.0
        }
    }

    /// Slot ordering: external edges at 0, internal edges at 0, internal
    /// edges at their terminal end.
    pub fn trace_slots(&self) -> Vec<TraceSlot> {
        let mut slots = Vec::with_capacity(self.deficiency_index());
        slots.extend((0..self.external.len()).map(|i| TraceSlot { edge: EdgeRef::External(i), endpoint: Endpoint::Initial }));
        slots.extend((0..self.internal.len()).map(|i| TraceSlot { edge: EdgeRef::Internal(i), endpoint: Endpoint::Initial }));
        slots.extend((0..self.internal.len()).map(|i| TraceSlot { edge: EdgeRef::Internal(i), endpoint: Endpoint::Terminal }));
        slots
    }

    pub fn slot_index(&self, slot: TraceSlot) -> usize {
        let (ne, ni) = (self.external.len(), self.internal.len());
        match (slot.edge, slot.endpoint) {
            (EdgeRef::External(i), _) => i,
            (EdgeRef::Internal(i), Endpoint::Initial) => ne + i,
            (EdgeRef::Internal(i), Endpoint::Terminal) => ne + ni + i,
        }
    }

    /// Vertex at which a trace slot sits.
    pub fn slot_vertex(&self, slot: TraceSlot) -> &str {
        match (slot.edge, slot.endpoint) {
            (EdgeRef::External(i), _) => &self.external[i].initial,
            (EdgeRef::Internal(i), Endpoint::Initial) => &self.internal[i].initial,
            (EdgeRef::Internal(i), Endpoint::Terminal) => &self.internal[i].terminal,
        }
    }

    /// Edges in function-storage order: external edges first, then internal.
    pub fn edges(&self) -> Vec<EdgeRef> {
        (0..self.external.len())
            .map(EdgeRef::External)
            .chain((0..self.internal.len()).map(EdgeRef::Internal))
            .collect()
    }
}

/// Uniform samples of a function on one edge (including both ends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSamples {
    pub length: f64,
    #[serde(with = "crate::json::complex_vec")]
    pub values: Vec<Complex64>,
}

impl EdgeSamples {
    pub fn h(&self) -> f64 {
        self.length / (self.values.len() - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.length * j as f64 / (self.values.len() - 1) as f64
    }
}

/// A function on a metric graph sampled on per-edge uniform grids. External
/// edges are truncated at a finite length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFunction {
    pub edges: Vec<EdgeSamples>,
}

/// Number of grid points for an edge of length `len` with spacing at most `h`.
pub fn grid_points(len: f64, h: f64) -> usize {
    ((len / h).ceil() as usize).max(2) + 1
}

impl EdgeFunction {
    /// Samples `f(edge, x)` with spacing at most `h`; external edges are cut
    /// at `ext_length`.
    pub fn sample<F>(graph: &MetricGraph, h: f64, ext_length: f64, f: F) -> Result<Self>
    where
        F: Fn(EdgeRef, f64) -> Complex64,
    {
        if !(h.is_finite() && h > 0.0) || !(ext_length.is_finite() && ext_length > 0.0) {
            return Err(Error::InvalidArgument("grid spacing and truncation must be positive".into()));
        }
        let edges = graph
            .edges()
            .into_iter()
            .map(|e| {
                let len = match e {
                    EdgeRef::External(_) => ext_length,
                    EdgeRef::Internal(i) => graph.internal[i].length,
                };
                let n = grid_points(len, h);
                let values = (0..n).map(|j| f(e, len * j as f64 / (n - 1) as f64)).collect();
                EdgeSamples { length: len, values }
            })
            .collect();
        Ok(Self { edges })
    }

    /// Same grid, new values.
    pub fn map_with<F>(&self, graph: &MetricGraph, f: F) -> Self
    where
        F: Fn(EdgeRef, f64) -> Complex64,
    {
        let refs = graph.edges();
        let edges = self
            .edges
            .iter()
            .zip(refs)
            .map(|(s, e)| EdgeSamples {
                length: s.length,
                values: (0..s.values.len()).map(|j| f(e, s.x(j))).collect(),
            })
            .collect();
        Self { edges }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            edges: self
                .edges
                .iter()
                .map(|s| EdgeSamples { length: s.length, values: vec![ZERO; s.values.len()] })
                .collect(),
        }
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.edges.len() == other.edges.len()
            && self.edges.iter().zip(&other.edges).all(|(a, b)| a.length == b.length && a.values.len() == b.values.len())
    }

    pub fn axpy(&mut self, alpha: Complex64, other: &Self) {
        for (a, b) in self.edges.iter_mut().zip(&other.edges) {
            for (x, y) in a.values.iter_mut().zip(&b.values) {
                *x += alpha * y;
            }
        }
    }

    pub fn scale(&mut self, alpha: Complex64) {
        for e in &mut self.edges {
            for x in &mut e.values {
                *x *= alpha;
            }
        }
    }

    /// `<self, other> = sum over edges of int self * conj(other)` (Simpson).
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.edges
            .iter()
            .zip(&other.edges)
            .map(|(a, b)| {
                let w = simpson_weights(a.values.len(), a.h());
                a.values.iter().zip(&b.values).zip(&w).map(|((x, y), w)| x * y.conj() * *w).sum::<Complex64>()
            })
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    /// Integral over the graph.
    pub fn integral(&self) -> Complex64 {
        self.edges
            .iter()
            .map(|a| {
                let w = simpson_weights(a.values.len(), a.h());
                a.values.iter().zip(&w).map(|(x, w)| x * *w).sum::<Complex64>()
            })
            .sum()
    }

    /// Boundary values and outward-from-the-edge derivatives in trace slot
    /// order, using second-order one-sided differences. The derivative slot
    /// of an internal edge's terminal end holds `-f'(a)`.
    pub fn trace(&self, graph: &MetricGraph) -> (CVector, CVector) {
        let d = graph.deficiency_index();
        let mut val = CVector::zeros(d);
        let mut der = CVector::zeros(d);
        let ne = graph.n_external();
        for slot in graph.trace_slots() {
            let idx = graph.slot_index(slot);
            let storage = match slot.edge {
                EdgeRef::External(i) => i,
                EdgeRef::Internal(i) => ne + i,
            };
            let s = &self.edges[storage];
            let v = &s.values;
            let h = s.h();
            let n = v.len();
            match slot.endpoint {
                Endpoint::Initial => {
                    val[idx] = v[0];
                    der[idx] = if n >= 3 { (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h) } else { (v[1] - v[0]) / h };
                }
                Endpoint::Terminal => {
                    val[idx] = v[n - 1];
                    let fp = if n >= 3 {
                        (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
                    } else {
                        (v[n - 1] - v[n - 2]) / h
                    };
                    der[idx] = -fp;
                }
            }
        }
        (val, der)
    }
}

/// Composite Simpson weights on `n` equally spaced points; an odd number of
/// intervals closes with a three-eighths panel.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match n {
        0 | 1 => return w,
        2 => {
            w[0] = h / 2.0;
            w[1] = h / 2.0;
            return w;
        }
        _ => {}
    }
    let intervals = n - 1;
    let simpson_end = if intervals % 2 == 0 { intervals } else { intervals - 3 };
    let mut i = 0;
    while i < simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if simpson_end < intervals {
        let s = simpson_end;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    w
}
