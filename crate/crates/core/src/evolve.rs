//! Implicit time stepping of the heat, Schrödinger and wave equations.
//!
//! Each edge carries linear finite elements with a lumped (trapezoid) mass
//! matrix `W` and stiffness `K`. The vertex conditions enter through one flux
//! unknown per trace slot: with `p` the inward derivatives and `E` the map
//! from slots to endpoint nodes, `-Delta u` is represented by
//! `W^{-1}(K u + E p)` subject to `A E^T u + B p = 0`. External edges are cut
//! at `ext_length` with a Dirichlet cap.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryConditions;
use crate::error::{Error, Result};
use crate::graph::{grid_points, EdgeFunction, EdgeRef, EdgeSamples, Endpoint, MetricGraph};
use crate::matrixcore::{op_norm, rcond, CMatrix, CVector, I, ONE, ZERO};

/// Default truncation radius of external edges.
pub const DEFAULT_EXT_LENGTH: f64 = 20.0;

/// Norms above this are treated as blow-up and end the run.
const BLOW_UP: f64 = 1e150;

#[derive(Debug, Clone, PartialEq)]
struct EdgeGrid {
    offset: usize,
    /// Unknowns on this edge; a capped edge omits its last grid node.
    nodes: usize,
    h: f64,
    length: f64,
    capped: bool,
}

/// Discretised `-Delta(A, B)` on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaplacian {
    graph: MetricGraph,
    bc: BoundaryConditions,
    ext_length: f64,
    grids: Vec<EdgeGrid>,
    /// Global node index of each trace slot.
    slot_node: Vec<usize>,
    weights: Vec<f64>,
    size: usize,
}

impl DiscreteLaplacian {
    /// Grid spacing at most `h` on every edge.
    pub fn new(graph: &MetricGraph, bc: &BoundaryConditions, h: f64, ext_length: f64) -> Result<Self> {
        bc.check_graph(graph)?;
        if !(h.is_finite() && h > 0.0) || !(ext_length.is_finite() && ext_length > 0.0) {
            return Err(Error::InvalidArgument("grid spacing and truncation must be positive".into()));
        }
        let mut grids = Vec::new();
        let mut weights = Vec::new();
        let mut offset = 0;
        for e in graph.edges() {
            let (length, capped) = match e {
                EdgeRef::External(_) => (ext_length, true),
                EdgeRef::Internal(i) => (graph.internal_edges()[i].length, false),
            };
            let n = grid_points(length, h);
            let hh = length / (n - 1) as f64;
            let nodes = if capped { n - 1 } else { n };
            for j in 0..nodes {
                let end = j == 0 || (!capped && j == nodes - 1);
                weights.push(if end { hh / 2.0 } else { hh });
            }
            grids.push(EdgeGrid { offset, nodes, h: hh, length, capped });
            offset += nodes;
        }
        let ne = graph.n_external();
        let slot_node = graph
            .trace_slots()
            .iter()
            .map(|s| {
                let g = match s.edge {
                    EdgeRef::External(i) => &grids[i],
                    EdgeRef::Internal(i) => &grids[ne + i],
                };
                match s.endpoint {
                    Endpoint::Initial => g.offset,
                    Endpoint::Terminal => g.offset + g.nodes - 1,
                }
            })
            .collect();
        Ok(Self { graph: graph.clone(), bc: bc.clone(), ext_length, grids, slot_node, weights, size: offset })
    }

    /// Number of nodal unknowns.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn boundary_conditions(&self) -> &BoundaryConditions {
        &self.bc
    }

    /// Trapezoid weights of the nodes.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Samples `f` on this grid; values at the caps are set to zero.
    pub fn sample<F>(&self, f: F) -> EdgeFunction
    where
        F: Fn(EdgeRef, f64) -> Complex64,
    {
        let refs = self.graph.edges();
        let edges = self
            .grids
            .iter()
            .zip(refs)
            .map(|(g, e)| {
                let n = if g.capped { g.nodes + 1 } else { g.nodes };
                let values = (0..n).map(|j| if j == g.nodes { ZERO } else { f(e, j as f64 * g.h) }).collect();
                EdgeSamples { length: g.length, values }
            })
            .collect();
        EdgeFunction { edges }
    }

    pub fn to_vector(&self, f: &EdgeFunction) -> Result<Vec<Complex64>> {
        let ok = f.edges.len() == self.grids.len()
            && f.edges.iter().zip(&self.grids).all(|(s, g)| {
                s.values.len() == if g.capped { g.nodes + 1 } else { g.nodes } && (s.length - g.length).abs() <= 1e-12 * g.length
            });
        if !ok {
            return Err(Error::Shape("edge function is not on the evolution grid".into()));
        }
        let mut v = Vec::with_capacity(self.size);
        for (s, g) in f.edges.iter().zip(&self.grids) {
            v.extend_from_slice(&s.values[..g.nodes]);
        }
        Ok(v)
    }

    pub fn to_function(&self, v: &[Complex64]) -> EdgeFunction {
        let edges = self
            .grids
            .iter()
            .map(|g| {
                let mut values = v[g.offset..g.offset + g.nodes].to_vec();
                if g.capped {
                    values.push(ZERO);
                }
                EdgeSamples { length: g.length, values }
            })
            .collect();
        EdgeFunction { edges }
    }

    /// `sqrt(u^* W u)`.
    pub fn norm(&self, v: &[Complex64]) -> f64 {
        v.iter().zip(&self.weights).map(|(x, w)| w * x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `(diag, off)` of `K` on one edge.
    fn stiffness(g: &EdgeGrid) -> (Vec<f64>, f64) {
        let n = g.nodes;
        let mut diag = vec![2.0 / g.h; n];
        diag[0] = 1.0 / g.h;
        if !g.capped {
            diag[n - 1] = 1.0 / g.h;
        }
        (diag, -1.0 / g.h)
    }

    fn apply_k(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.size];
        for g in &self.grids {
            let (diag, off) = Self::stiffness(g);
            let o = g.offset;
            for j in 0..g.nodes {
                let mut acc = diag[j] * u[o + j];
                if j > 0 {
                    acc += off * u[o + j - 1];
                }
                if j + 1 < g.nodes {
                    acc += off * u[o + j + 1];
                }
                out[o + j] = acc;
            }
        }
        out
    }

    fn trace(&self, u: &[Complex64]) -> CVector {
        CVector::from_iterator(self.slot_node.len(), self.slot_node.iter().map(|&n| u[n]))
    }
}

/// LU factors of a tridiagonal matrix without pivoting.
#[derive(Debug, Clone)]
struct Tridiagonal {
    lower: Vec<Complex64>,
    upper: Vec<Complex64>,
    /// Reciprocal pivots.
    pivot_inv: Vec<Complex64>,
}

impl Tridiagonal {
    fn factor(lower: Vec<Complex64>, diag: Vec<Complex64>, upper: Vec<Complex64>) -> Result<Self> {
        let n = diag.len();
        let mut pivot_inv = vec![ZERO; n];
        let mut prev = ZERO;
        for j in 0..n {
            let piv = if j == 0 { diag[0] } else { diag[j] - lower[j - 1] * upper[j - 1] * prev };
            if piv.norm() == 0.0 || !piv.is_finite() {
                return Err(Error::SingularStep);
            }
            prev = 1.0 / piv;
            pivot_inv[j] = prev;
        }
        Ok(Self { lower, upper, pivot_inv })
    }

    fn solve(&self, rhs: &mut [Complex64]) {
        let n = rhs.len();
        for j in 1..n {
            rhs[j] -= self.lower[j - 1] * self.pivot_inv[j - 1] * rhs[j - 1];
        }
        rhs[n - 1] *= self.pivot_inv[n - 1];
        for j in (0..n - 1).rev() {
            rhs[j] = (rhs[j] - self.upper[j] * rhs[j + 1]) * self.pivot_inv[j];
        }
    }
}

/// Solver for `M x + alpha E p = r`, `C_A E^T x + C_B p = s` with
/// `M = mass W + stiff K` block tridiagonal.
#[derive(Debug, Clone)]
struct BorderedSolver {
    blocks: Vec<Tridiagonal>,
    /// `(edge, M^{-1} E e_s restricted to that edge)` per slot.
    minv_e: Vec<(usize, Vec<Complex64>)>,
    schur_inv: CMatrix,
    c_a: CMatrix,
    alpha: Complex64,
}

impl BorderedSolver {
    fn new(dl: &DiscreteLaplacian, mass: Complex64, stiff: Complex64, alpha: Complex64, c_b: CMatrix) -> Result<Self> {
        let mut blocks = Vec::with_capacity(dl.grids.len());
        for g in &dl.grids {
            let (kd, ko) = DiscreteLaplacian::stiffness(g);
            let diag = (0..g.nodes).map(|j| mass * dl.weights[g.offset + j] + stiff * kd[j]).collect();
            let off = vec![stiff * ko; g.nodes.saturating_sub(1)];
            blocks.push(Tridiagonal::factor(off.clone(), diag, off)?);
        }
        let edge_of = |node: usize| dl.grids.iter().position(|g| node >= g.offset && node < g.offset + g.nodes).expect("node on grid");
        let minv_e: Vec<(usize, Vec<Complex64>)> = dl
            .slot_node
            .iter()
            .map(|&node| {
                let e = edge_of(node);
                let g = &dl.grids[e];
                let mut col = vec![ZERO; g.nodes];
                col[node - g.offset] = ONE;
                blocks[e].solve(&mut col);
                (e, col)
            })
            .collect();
        let d = dl.slot_node.len();
        // G = E^T M^{-1} E
        let gmat = CMatrix::from_fn(d, d, |r, c| {
            let (e, col) = &minv_e[c];
            let node = dl.slot_node[r];
            let g = &dl.grids[*e];
            if node >= g.offset && node < g.offset + g.nodes {
                col[node - g.offset]
            } else {
                ZERO
            }
        });
        let c_a = dl.bc.a().clone();
        let schur = &c_b - &c_a * gmat * alpha;
        if d > 0 && rcond(&schur) < 1e-14 {
            return Err(Error::SingularStep);
        }
        let schur_inv = if d > 0 { schur.try_inverse().ok_or(Error::SingularStep)? } else { schur };
        Ok(Self { blocks, minv_e, schur_inv, c_a, alpha })
    }

    fn solve(&self, dl: &DiscreteLaplacian, r: &[Complex64], s: &CVector) -> Vec<Complex64> {
        let mut x = r.to_vec();
        for (g, blk) in dl.grids.iter().zip(&self.blocks) {
            blk.solve(&mut x[g.offset..g.offset + g.nodes]);
        }
        if self.minv_e.is_empty() {
            return x;
        }
        let rhs = s - &self.c_a * dl.trace(&x);
        let p = &self.schur_inv * rhs;
        for (slot, (e, col)) in self.minv_e.iter().enumerate() {
            let off = dl.grids[*e].offset;
            let coef = self.alpha * p[slot];
            for (j, c) in col.iter().enumerate() {
                x[off + j] -= coef * c;
            }
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Heat,
    Schrodinger,
    Wave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub psi: EdgeFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    /// `sqrt(u^* W u)` at each recorded time.
    pub norms: Vec<f64>,
    /// Wave only: `v^* W v + Re u^* K u`.
    pub energies: Option<Vec<f64>>,
    /// First step whose norm was not finite or exceeded `1e150`.
    pub blow_up_step: Option<usize>,
    pub snapshots: Vec<Snapshot>,
}

/// One-step map of a Crank–Nicolson run: the conditions are imposed on the
/// midpoint `(u^n + u^{n+1})/2`.
struct FirstOrderStep {
    solver: BorderedSolver,
}

impl FirstOrderStep {
    fn new(dl: &DiscreteLaplacian, eq: Equation, dt: f64) -> Result<Self> {
        let c = match eq {
            Equation::Heat => ONE,
            Equation::Schrodinger => I,
            Equation::Wave => return Err(Error::InvalidArgument("wave equation is second order".into())),
        };
        let solver = BorderedSolver::new(dl, Complex64::new(2.0, 0.0), c * dt, c * dt, dl.bc.b().clone())?;
        Ok(Self { solver })
    }

    fn apply(&self, dl: &DiscreteLaplacian, u: &[Complex64]) -> Vec<Complex64> {
        let r: Vec<Complex64> = u.iter().zip(&dl.weights).map(|(x, w)| 2.0 * w * x).collect();
        let s = CVector::zeros(dl.slot_node.len());
        let mid = self.solver.solve(dl, &r, &s);
        mid.iter().zip(u).map(|(m, x)| 2.0 * m - x).collect()
    }
}

fn check_step(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument("dt must be positive".into()))
    }
}

/// Runs `n_steps` steps of size `dt`, keeping a snapshot every
/// `snapshot_every` steps (never when zero). `v0` is required for the wave
/// equation and ignored otherwise.
pub fn evolve(
    dl: &DiscreteLaplacian,
    eq: Equation,
    psi0: &EdgeFunction,
    v0: Option<&EdgeFunction>,
    dt: f64,
    n_steps: usize,
    snapshot_every: usize,
) -> Result<EvolutionResult> {
    check_step(dt)?;
    let mut u = dl.to_vector(psi0)?;
    let mut times = vec![0.0];
    let mut norms = vec![dl.norm(&u)];
    let mut snapshots = Vec::new();
    let mut blow_up_step = None;
    let snap = |step: usize, u: &[Complex64], snapshots: &mut Vec<Snapshot>| {
        if snapshot_every > 0 && step % snapshot_every == 0 {
            snapshots.push(Snapshot { time: step as f64 * dt, psi: dl.to_function(u) });
        }
    };
    snap(0, &u, &mut snapshots);
    if eq != Equation::Wave {
        let step = FirstOrderStep::new(dl, eq, dt)?;
        for n in 1..=n_steps {
            u = step.apply(dl, &u);
            let nrm = dl.norm(&u);
            times.push(n as f64 * dt);
            norms.push(nrm);
            if !nrm.is_finite() || nrm > BLOW_UP {
                blow_up_step = Some(n);
                break;
            }
            snap(n, &u, &mut snapshots);
        }
        return Ok(EvolutionResult { times, norms, energies: None, blow_up_step, snapshots });
    }
    let mut v = match v0 {
        Some(v0) => dl.to_vector(v0)?,
        None => return Err(Error::InvalidArgument("wave equation needs an initial velocity".into())),
    };
    let energy = |u: &[Complex64], v: &[Complex64]| {
        let ku = dl.apply_k(u);
        let kin: f64 = v.iter().zip(&dl.weights).map(|(x, w)| w * x.norm_sqr()).sum();
        let pot: f64 = u.iter().zip(&ku).map(|(x, y)| (x.conj() * y).re).sum();
        kin + pot
    };
    let mut energies = vec![energy(&u, &v)];
    let q = dt * dt / 4.0;
    let solver = BorderedSolver::new(dl, ONE, Complex64::new(q, 0.0), Complex64::new(2.0 * q, 0.0), dl.bc.b() * Complex64::new(2.0, 0.0))?;
    for n in 1..=n_steps {
        let ku = dl.apply_k(&u);
        let r: Vec<Complex64> = (0..dl.size).map(|j| dl.weights[j] * (u[j] + dt * v[j]) - q * ku[j]).collect();
        let s = -(dl.bc.a() * dl.trace(&u));
        let next = solver.solve(dl, &r, &s);
        v = (0..dl.size).map(|j| 2.0 * (next[j] - u[j]) / dt - v[j]).collect();
        u = next;
        let nrm = dl.norm(&u);
        times.push(n as f64 * dt);
        norms.push(nrm);
        energies.push(energy(&u, &v));
        if !nrm.is_finite() || nrm > BLOW_UP {
            blow_up_step = Some(n);
            break;
        }
        snap(n, &u, &mut snapshots);
    }
    Ok(EvolutionResult { times, norms, energies: Some(energies), blow_up_step, snapshots })
}

/// Crank–Nicolson for `u_t = Delta u`.
pub fn step_heat(dl: &DiscreteLaplacian, psi0: &EdgeFunction, dt: f64, n_steps: usize) -> Result<EvolutionResult> {
    evolve(dl, Equation::Heat, psi0, None, dt, n_steps, 0)
}

/// Crank–Nicolson for `i u_t = -Delta u`.
pub fn step_schrodinger(dl: &DiscreteLaplacian, psi0: &EdgeFunction, dt: f64, n_steps: usize) -> Result<EvolutionResult> {
    evolve(dl, Equation::Schrodinger, psi0, None, dt, n_steps, 0)
}

/// Trapezoidal rule on `(u, u_t)` for `u_tt = Delta u`, the average
/// acceleration Newmark scheme.
pub fn step_wave(dl: &DiscreteLaplacian, psi0: &EdgeFunction, v0: &EdgeFunction, dt: f64, n_steps: usize) -> Result<EvolutionResult> {
    evolve(dl, Equation::Wave, psi0, Some(v0), dt, n_steps, 0)
}

/// One-step matrix of a first-order scheme in `W`-orthonormal coordinates,
/// so that its operator norm is the `W`-norm of the step.
pub fn propagator_matrix(dl: &DiscreteLaplacian, eq: Equation, dt: f64) -> Result<CMatrix> {
    check_step(dt)?;
    let step = FirstOrderStep::new(dl, eq, dt)?;
    let n = dl.size;
    let sq: Vec<f64> = dl.weights.iter().map(|w| w.sqrt()).collect();
    let mut p = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![ZERO; n];
        e[j] = Complex64::new(1.0 / sq[j], 0.0);
        let col = step.apply(dl, &e);
        for i in 0..n {
            p[(i, j)] = col[i] * sq[i];
        }
    }
    Ok(p)
}

/// `max_{1 <= n <= n_steps} ||P^n||_W` for the dense one-step matrix `P`.
pub fn propagator_bound(dl: &DiscreteLaplacian, eq: Equation, dt: f64, n_steps: usize) -> Result<f64> {
    let p = propagator_matrix(dl, eq, dt)?;
    let mut pow = p.clone();
    let mut best = op_norm(&pow);
    for _ in 1..n_steps {
        pow = &p * &pow;
        best = best.max(op_norm(&pow));
    }
    Ok(best)
}

/// Fitted constants `C(h) = max_n ||P^n||_W` of the heat step over
/// `[0, t_end]` on grids `h0, h0/2, ...` (`levels` grids in all), with the
/// parabolic time step `dt = dt_factor h^2`. For generators `C(h)` stays
/// bounded as `h -> 0`; growth by a factor of two or more per halving is
/// the signature of a missing uniform bound. The factor two is a heuristic
/// threshold, not a rate from the continuous theory.
pub fn refinement_bounds(
    graph: &MetricGraph,
    bc: &BoundaryConditions,
    h0: f64,
    levels: usize,
    dt_factor: f64,
    t_end: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(t_end.is_finite() && t_end > 0.0 && dt_factor > 0.0) {
        return Err(Error::InvalidArgument("t_end and dt_factor must be positive".into()));
    }
    (0..levels)
        .map(|l| {
            let h = h0 / 2f64.powi(l as i32);
            let dt = dt_factor * h * h;
            let dl = DiscreteLaplacian::new(graph, bc, h, DEFAULT_EXT_LENGTH)?;
            let n = ((t_end / dt).round() as usize).max(1);
            Ok((h, propagator_bound(&dl, Equation::Heat, dt, n)?))
        })
        .collect()
}

/// Eigenvalues of the discrete operator recovered from the Crank–Nicolson
/// heat step: `lambda = (2/dt)(1 - mu)/(1 + mu)`. Steps with `mu` near `-1`
/// (constrained or infinite modes) are dropped. Sorted by real part.
pub fn discrete_eigenvalues(dl: &DiscreteLaplacian, dt: f64) -> Result<Vec<Complex64>> {
    let p = propagator_matrix(dl, Equation::Heat, dt)?;
    let mu = crate::matrixcore::eigenvalues(&p)?;
    let mut out: Vec<Complex64> =
        mu.into_iter().filter(|m| (m + 1.0).norm() > 1e-8).map(|m| (2.0 / dt) * (1.0 - m) / (1.0 + m)).collect();
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

/// Largest relative change of the recorded norms when the truncation radius
/// of the external edges is doubled.
pub fn truncation_change<F>(
    graph: &MetricGraph,
    bc: &BoundaryConditions,
    h: f64,
    ext_length: f64,
    eq: Equation,
    f: F,
    dt: f64,
    n_steps: usize,
) -> Result<f64>
where
    F: Fn(EdgeRef, f64) -> Complex64 + Copy,
{
    let run = |r: f64| -> Result<Vec<f64>> {
        let dl = DiscreteLaplacian::new(graph, bc, h, r)?;
        let psi0 = dl.sample(f);
        let v0 = psi0.zeros_like();
        Ok(evolve(&dl, eq, &psi0, Some(&v0), dt, n_steps, 0)?.norms)
    };
    let a = run(ext_length)?;
    let b = run(2.0 * ext_length)?;
    let scale = a.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max))
}

impl DiscreteLaplacian {
    /// Truncation radius of the external edges.
    pub fn ext_length(&self) -> f64 {
        self.ext_length
    }
}
