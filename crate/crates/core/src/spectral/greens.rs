//! Resolvent kernel `r = r0 + r1` applied to sampled functions.
//!
//! `r0(x, y) = (i/2k) e^{ik|x-y|}` on each edge and
//! `r1(x, y) = (i/2k) Phi(x) M Phi(y)^T` with `M = -Z(k)^{-1}(A - ikB)`,
//! which equals `(I - S T)^{-1} S` wherever `S` exists.

use num_complex::Complex64;

use super::secular_matrix;
use crate::boundary::BoundaryConditions;
use crate::error::{Error, Result};
use crate::graph::{EdgeFunction, EdgeSamples, MetricGraph};
use crate::matrixcore::{rcond, solve, CMatrix, CVector, I};

/// `(e^z - 1)/z` and `(e^z - 1 - z)/z^2`.
fn phi12(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut p1 = Complex64::new(0.0, 0.0);
        let mut p2 = Complex64::new(0.0, 0.0);
        // term = z^n / n!
        for n in 0..30 {
            p1 += term / (n + 1) as f64;
            p2 += term / ((n + 1) * (n + 2)) as f64;
            term *= z / (n + 1) as f64;
        }
        (p1, p2)
    } else {
        let e = z.exp();
        ((e - 1.0) / z, (e - 1.0 - z) / (z * z))
    }
}

/// Forward and backward exponential sums on one edge with `f` interpolated
/// linearly between nodes and the exponential integrated exactly:
/// `P(x) = int_0^x e^{ik(x-y)} f(y) dy`, `Q(x) = int_x^L e^{ik(y-x)} f(y) dy`.
fn sweeps(s: &EdgeSamples, k: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = s.values.len();
    let h = s.h();
    let z = I * k * h;
    let e = z.exp();
    let (p1, p2) = phi12(z);
    let (wa, wb) = (h * (p1 - p2), h * p2);
    let f = &s.values;
    let mut p = vec![Complex64::new(0.0, 0.0); n];
    let mut q = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n - 1 {
        p[j + 1] = e * p[j] + wa * f[j] + wb * f[j + 1];
    }
    for j in (0..n - 1).rev() {
        q[j] = e * q[j + 1] + wa * f[j + 1] + wb * f[j];
    }
    (p, q)
}

/// The branch of `sqrt(z)` with nonnegative imaginary part.
pub fn resolvent_k(z: Complex64) -> Complex64 {
    let k = z.sqrt();
    if k.im < 0.0 || (k.im == 0.0 && k.re < 0.0) {
        -k
    } else {
        k
    }
}

/// The resolvent `(-Delta(A, B) - k^2)^{-1}` as an integral operator.
#[derive(Debug, Clone)]
pub struct GreensKernel<'a> {
    graph: &'a MetricGraph,
    k: Complex64,
    m: CMatrix,
}

impl<'a> GreensKernel<'a> {
    /// Requires `k != 0`, `Im k > 0` when external edges are present, and
    /// `k^2` off the spectrum.
    pub fn new(bc: &BoundaryConditions, graph: &'a MetricGraph, k: Complex64) -> Result<Self> {
        bc.check_graph(graph)?;
        if k.norm() == 0.0 {
            return Err(Error::ZeroK);
        }
        if !graph.is_compact() && k.im <= 0.0 {
            return Err(Error::InvalidArgument("Im k must be positive on graphs with external edges".into()));
        }
        let z = secular_matrix(bc, graph, k);
        let d = bc.dim();
        if d > 0 && rcond(&z) < 1e-13 {
            return Err(Error::OnSpectrum(k));
        }
        let m = -solve(&z, &(bc.a() - bc.b() * (I * k)))?;
        Ok(Self { graph, k, m })
    }

    pub fn k(&self) -> Complex64 {
        self.k
    }

    /// `u = R f` on the grid of `f`. External edges are treated as carrying
    /// `f = 0` beyond their sampled length.
    pub fn apply(&self, f: &EdgeFunction) -> Result<EdgeFunction> {
        Ok(self.apply_with_traces(f)?.0)
    }

    /// `u = R f` together with its boundary values and derivatives in trace
    /// slot order, evaluated from the kernel rather than by differencing.
    pub fn apply_with_traces(&self, f: &EdgeFunction) -> Result<(EdgeFunction, CVector, CVector)> {
        let g = self.graph;
        let (ne, ni) = (g.n_external(), g.n_internal());
        if f.edges.len() != ne + ni || f.edges.iter().any(|e| e.values.len() < 2) {
            return Err(Error::Shape("edge function does not match the graph".into()));
        }
        for (j, e) in g.internal_edges().iter().enumerate() {
            if (f.edges[ne + j].length - e.length).abs() > 1e-12 * e.length {
                return Err(Error::Shape("internal edge length mismatch".into()));
            }
        }
        let k = self.k;
        let pre = I / (2.0 * k);
        let d = g.deficiency_index();
        let sw: Vec<_> = f.edges.iter().map(|s| sweeps(s, k)).collect();
        let mut c = CVector::zeros(d);
        for i in 0..ne {
            c[i] = sw[i].1[0];
        }
        for j in 0..ni {
            let (p, q) = &sw[ne + j];
            c[ne + j] = q[0];
            c[ne + ni + j] = *p.last().expect("nonempty");
        }
        let mc = &self.m * &c;
        let mut vals = CVector::zeros(d);
        let mut ders = CVector::zeros(d);
        let mut out = f.zeros_like();
        for (idx, s) in f.edges.iter().enumerate() {
            let (p, q) = &sw[idx];
            let n = s.values.len();
            let u = &mut out.edges[idx].values;
            let len = s.length;
            if idx < ne {
                for j in 0..n {
                    let x = s.x(j);
                    u[j] = pre * (p[j] + q[j] + (I * k * x).exp() * mc[idx]);
                }
                vals[idx] = pre * (q[0] + mc[idx]);
                ders[idx] = 0.5 * q[0] - 0.5 * mc[idx];
            } else {
                let jj = idx - ne;
                let (s0, sa) = (ne + jj, ne + ni + jj);
                let ea = (I * k * len).exp();
                for j in 0..n {
                    let x = s.x(j);
                    u[j] = pre * (p[j] + q[j] + (I * k * x).exp() * mc[s0] + (I * k * (len - x)).exp() * mc[sa]);
                }
                vals[s0] = pre * (q[0] + mc[s0] + ea * mc[sa]);
                ders[s0] = 0.5 * q[0] - 0.5 * (mc[s0] - ea * mc[sa]);
                vals[sa] = pre * (p[n - 1] + ea * mc[s0] + mc[sa]);
                ders[sa] = 0.5 * p[n - 1] - 0.5 * (mc[sa] - ea * mc[s0]);
            }
        }
        Ok((out, vals, ders))
    }
}
