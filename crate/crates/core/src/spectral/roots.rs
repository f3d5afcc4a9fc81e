//! Zeros of the secular determinant by the argument principle, and the point
//! spectrum on star graphs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{log_derivative, secular, secular_matrix};
use crate::boundary::{classify_bc, BoundaryConditions, ClassTag};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::matrixcore::{pencil_eigenvalues_tol, rcond, PencilSpectrum, RankTolerance, I};

/// Closed rectangle in the `k`-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchRegion {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let r = Self { re_min, re_max, im_min, im_max };
        if ![re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite()) || re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidArgument(format!("degenerate search region {r:?}")));
        }
        Ok(r)
    }

    pub fn contains(&self, k: Complex64) -> bool {
        k.re >= self.re_min && k.re <= self.re_max && k.im >= self.im_min && k.im <= self.im_max
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    fn diameter(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }

    fn grown(&self, frac: f64) -> Self {
        let (dr, di) = (frac * (self.re_max - self.re_min), frac * (self.im_max - self.im_min));
        Self { re_min: self.re_min - dr, re_max: self.re_max + dr, im_min: self.im_min - di, im_max: self.im_max + di }
    }

    fn split(&self, fr: f64, fi: f64) -> [Self; 4] {
        let xm = self.re_min + fr * (self.re_max - self.re_min);
        let ym = self.im_min + fi * (self.im_max - self.im_min);
        [
            Self { re_min: self.re_min, re_max: xm, im_min: self.im_min, im_max: ym },
            Self { re_min: xm, re_max: self.re_max, im_min: self.im_min, im_max: ym },
            Self { re_min: self.re_min, re_max: xm, im_min: ym, im_max: self.im_max },
            Self { re_min: xm, re_max: self.re_max, im_min: ym, im_max: self.im_max },
        ]
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Trapezoid nodes per rectangle side before refinement.
    pub nodes_per_side: usize,
    /// Distance from an integer below which a winding number is accepted.
    pub integer_tol: f64,
    pub max_depth: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { nodes_per_side: 128, integer_tol: 1e-3, max_depth: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    #[serde(with = "crate::json::complex")]
    pub k: Complex64,
    #[serde(with = "crate::json::complex")]
    pub lambda: Complex64,
    pub multiplicity: usize,
    /// `|det(I - S T)|` at the refined root; absent at Cayley poles.
    pub residual: Option<f64>,
    /// False for zeros that are resonances rather than eigenvalues
    /// (`Im k <= 0` with external edges present).
    pub is_eigenvalue: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub points: Vec<SpectralPoint>,
    /// `[0, inf)` belongs to the spectrum (external edges present).
    pub essential_spectrum: bool,
    /// Every complex number is in the spectrum.
    pub whole_plane: bool,
    pub region: Option<SearchRegion>,
    /// Winding number of the secular determinant around the region.
    pub total_winding: Option<i64>,
}

struct Contour<'a> {
    bc: &'a BoundaryConditions,
    graph: &'a MetricGraph,
    opts: RootOptions,
}

/// Rounded winding number and first moment `sum of zeros`.
type Winding = (i64, Complex64);

impl Contour<'_> {
    fn integrals(&self, cell: &SearchRegion, n: usize) -> Option<(Complex64, Complex64)> {
        let c = cell.corners();
        let mut w = Complex64::new(0.0, 0.0);
        let mut mom = Complex64::new(0.0, 0.0);
        for s in 0..4 {
            let (z0, z1) = (c[s], c[(s + 1) % 4]);
            let dz = (z1 - z0) / n as f64;
            for j in 0..=n {
                let z = z0 + dz * j as f64;
                let g = log_derivative(self.bc, self.graph, z).ok()?;
                if !(g.re.is_finite() && g.im.is_finite()) {
                    return None;
                }
                let wt = if j == 0 || j == n { 0.5 } else { 1.0 };
                w += g * dz * wt;
                mom += z * g * dz * wt;
            }
        }
        let scale = 1.0 / (2.0 * PI * I);
        Some((w * scale, mom * scale))
    }

    fn winding(&self, cell: &SearchRegion) -> Option<Winding> {
        let mut n = self.opts.nodes_per_side;
        let mut last = None;
        for _ in 0..4 {
            if let Some((w, mom)) = self.integrals(cell, n) {
                let r = w.re.round();
                if (w - r).norm() < self.opts.integer_tol && r >= 0.0 {
                    return Some((r as i64, mom));
                }
                last = Some(mom);
            }
            n *= 2;
        }
        // a zero close to the boundary: count by tracking arg det instead,
        // which needs no node budget; the moment is then only a rough guess
        let r = self.arg_winding(cell)?;
        Some((r, last.unwrap_or(cell.center() * r as f64)))
    }

    /// Winding number from the continuous change of `arg det Z` along the
    /// boundary. A segment is accepted once `det Z` changes by less than half
    /// its modulus across it and bends little at the midpoint, which keeps the
    /// segment shorter than its distance to any zero.
    fn arg_winding(&self, cell: &SearchRegion) -> Option<i64> {
        let c = cell.corners();
        let min_len = 1e-13 * (1.0 + cell.diameter());
        let mut total = 0.0;
        for s in 0..4 {
            let (z0, z1) = (c[s], c[(s + 1) % 4]);
            let n = self.opts.nodes_per_side;
            let dz = (z1 - z0) / n as f64;
            let mut prev = (z0, self.det_nonzero(z0)?);
            for j in 1..=n {
                let z = z0 + dz * j as f64;
                let next = (z, self.det_nonzero(z)?);
                total += self.arg_change(prev, next, min_len)?;
                prev = next;
            }
        }
        let w = total / (2.0 * PI);
        let r = w.round();
        ((w - r).abs() < 1e-6 && r >= 0.0).then_some(r as i64)
    }

    /// `det Z(z)`, which unlike `det(I - S T)` has no poles.
    fn det_nonzero(&self, z: Complex64) -> Option<Complex64> {
        let f = secular_matrix(self.bc, self.graph, z).determinant();
        (f.norm() > 0.0 && f.re.is_finite() && f.im.is_finite()).then_some(f)
    }

    fn arg_change(&self, a: (Complex64, Complex64), b: (Complex64, Complex64), min_len: f64) -> Option<f64> {
        if (b.0 - a.0).norm() < min_len {
            return None;
        }
        let zm = 0.5 * (a.0 + b.0);
        let m = (zm, self.det_nonzero(zm)?);
        let floor = a.1.norm().min(b.1.norm()).min(m.1.norm());
        if (b.1 - a.1).norm() <= 0.5 * floor && (m.1 - 0.5 * (a.1 + b.1)).norm() <= 0.125 * floor {
            return Some((b.1 / a.1).arg());
        }
        Some(self.arg_change(a, m, min_len)? + self.arg_change(m, b, min_len)?)
    }

    fn newton(&self, mut k: Complex64, mult: usize) -> Option<Complex64> {
        for _ in 0..60 {
            let g = match log_derivative(self.bc, self.graph, k) {
                Ok(g) if g.norm().is_finite() && g.norm() > 0.0 => g,
                _ => return Some(k),
            };
            let step = mult as f64 / g;
            k -= step;
            if step.norm() < 1e-15 * (1.0 + k.norm()) {
                return Some(k);
            }
        }
        // linear convergence near clustered zeros: accept if still moving slowly
        Some(k)
    }

    fn resolve(&self, cell: SearchRegion, win: Winding, depth: usize) -> Result<Vec<(Complex64, usize)>> {
        let (w, mom) = win;
        if w == 0 {
            return Ok(vec![]);
        }
        let guess = mom / w as f64;
        let small = cell.diameter() < 1e-7 * (1.0 + cell.center().norm());
        if w == 1 || small || depth >= self.opts.max_depth {
            let mult = w as usize;
            if let Some(k) = self.newton(if cell.grown(0.0).contains(guess) { guess } else { cell.center() }, mult) {
                if cell.grown(1e-6).contains(k) && (w == 1 || small || depth >= self.opts.max_depth) {
                    return Ok(vec![(k, mult)]);
                }
            }
            if depth >= self.opts.max_depth {
                return Err(Error::NoConvergence("root isolation".into()));
            }
        }
        for (fr, fi) in [(0.5123, 0.4877), (0.4371, 0.5629), (0.5813, 0.4187), (0.4629, 0.5371)] {
            let children = cell.split(fr, fi);
            let wins: Vec<Option<Winding>> = children.par_iter().map(|c| self.winding(c)).collect();
            if wins.iter().any(|w| w.is_none()) {
                continue;
            }
            let wins: Vec<Winding> = wins.into_iter().flatten().collect();
            if wins.iter().map(|w| w.0).sum::<i64>() != w {
                continue;
            }
            let parts: Vec<Result<Vec<(Complex64, usize)>>> = children
                .par_iter()
                .zip(wins.par_iter())
                .map(|(c, w)| self.resolve(*c, *w, depth + 1))
                .collect();
            let mut out = Vec::new();
            for p in parts {
                out.extend(p?);
            }
            return Ok(out);
        }
        Err(Error::ContourThroughZero)
    }
}

/// Zeros of the secular determinant in a rectangle of the `k`-plane for a
/// graph with at least one internal edge. The region must exclude `k = 0`.
pub fn compact_spectrum(
    bc: &BoundaryConditions,
    graph: &MetricGraph,
    region: SearchRegion,
    opts: RootOptions,
) -> Result<SpectralReport> {
    bc.check_graph(graph)?;
    if graph.is_star() {
        return Err(Error::InvalidArgument("graph has no internal edges; use the star point spectrum".into()));
    }
    if region.grown(1e-12).contains(Complex64::new(0.0, 0.0)) {
        return Err(Error::InvalidArgument("search region must exclude k = 0".into()));
    }
    let tol = RankTolerance::default();
    let d = bc.dim();
    let rank = bc.rank(tol)?;
    if rank < d {
        return Err(Error::RankDeficient { rank, dim: d });
    }
    let essential = !graph.is_compact();
    let probes = [region.center(), region.corners()[0], region.corners()[2], Complex64::new(0.37, 1.91)];
    if probes.iter().all(|&k| rcond(&secular_matrix(bc, graph, k)) < 1e-13) {
        return Ok(SpectralReport { points: vec![], essential_spectrum: essential, whole_plane: true, region: Some(region), total_winding: None });
    }
    let contour = Contour { bc, graph, opts };
    let win = contour.winding(&region).ok_or(Error::ContourThroughZero)?;
    let roots = contour.resolve(region, win, 0)?;
    let mut points: Vec<SpectralPoint> = roots
        .into_iter()
        .map(|(k, multiplicity)| SpectralPoint {
            k,
            lambda: k * k,
            multiplicity,
            residual: secular(bc, graph, k).ok().map(|s| s.norm()),
            is_eigenvalue: graph.is_compact() || k.im > 1e-10 * (1.0 + k.norm()),
        })
        .collect();
    points.sort_by(|a, b| a.k.re.total_cmp(&b.k.re).then(a.k.im.total_cmp(&b.k.im)));
    Ok(SpectralReport { points, essential_spectrum: essential, whole_plane: false, region: Some(region), total_winding: Some(win.0) })
}

/// Eigenvalues of a star graph: `k = -i mu` for roots `mu` of `det(A + mu B)`
/// with `Im k > 0`.
pub fn star_point_spectrum(bc: &BoundaryConditions, graph: &MetricGraph, tol: RankTolerance) -> Result<SpectralReport> {
    bc.check_graph(graph)?;
    if !graph.is_star() {
        return Err(Error::NotAStarGraph);
    }
    let class = classify_bc(bc, tol)?;
    if class.tag == ClassTag::RankDeficient {
        let rank = bc.rank(tol)?;
        return Err(Error::RankDeficient { rank, dim: bc.dim() });
    }
    let spec = pencil_eigenvalues_tol(bc.a(), bc.b(), tol)?;
    let finite = match spec {
        PencilSpectrum::Singular => {
            return Ok(SpectralReport { points: vec![], essential_spectrum: true, whole_plane: true, region: None, total_winding: None })
        }
        PencilSpectrum::Regular { finite, .. } => finite,
    };
    let mut points: Vec<SpectralPoint> = finite
        .into_iter()
        .map(|r| (-I * r.value, r.multiplicity))
        .filter(|(k, _)| k.im > 1e-10 * (1.0 + k.norm()))
        .map(|(k, multiplicity)| SpectralPoint {
            k,
            lambda: k * k,
            multiplicity,
            residual: Some(crate::matrixcore::singular_values(&(bc.a() + bc.b() * (I * k))).last().copied().unwrap_or(0.0)),
            is_eigenvalue: true,
        })
        .collect();
    points.sort_by(|a, b| a.k.re.total_cmp(&b.k.re).then(a.k.im.total_cmp(&b.k.im)));
    Ok(SpectralReport { points, essential_spectrum: true, whole_plane: false, region: None, total_winding: None })
}
