//! Regions of the `lambda`-plane containing the whole spectrum.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::resolvent_k;
use crate::boundary::{cayley, cayley_poles, classify_bc, BoundaryConditions, ClassTag, QuasiWeierstrassForm};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::matrixcore::{identity, inverse, op_norm, CMatrix, RankTolerance};

/// With `k` the root of `lambda` in the closed upper half-plane, the
/// spectrum lies where `Im k <= t_star` (parabola) or
/// `Im k <= max(slope |Re k|, t_star)` (parabola joined to a sector).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnclosureRegion {
    /// `{lambda : c (Im lambda)^2 - big_c <= Re lambda}` with
    /// `c = 1/(4 t_star^2)`, `big_c = t_star^2`.
    Parabola { t_star: f64, c: f64, big_c: f64 },
    /// Parabola of height `t_star` together with the sector
    /// `|arg lambda| <= 2 atan(slope)`.
    Sector { t_star: f64, slope: f64, half_angle: f64 },
}

impl EnclosureRegion {
    pub fn contains(&self, lambda: Complex64) -> bool {
        let k = resolvent_k(lambda);
        let fuzz = 1e-9 * (1.0 + k.norm());
        match *self {
            EnclosureRegion::Parabola { t_star, .. } => k.im <= t_star + fuzz,
            EnclosureRegion::Sector { t_star, slope, .. } => k.im <= (slope * k.re.abs()).max(t_star) + fuzz,
        }
    }
}

const SECTOR_SLOPE: f64 = 0.5;

/// `lim S(k)` as `|k| -> inf` for quasi-sectorial pairs: `G^{-1} diag(I, -I) G`.
fn cayley_at_infinity(qw: &QuasiWeierstrassForm) -> Result<CMatrix> {
    let (d, m) = (qw.dim(), qw.m);
    let mut blk = identity(d);
    for i in m..d {
        blk[(i, i)] = -blk[(i, i)];
    }
    Ok(inverse(&qw.g)? * blk * &qw.g)
}

fn line_sup(bc: &BoundaryConditions, t: f64, half_width: f64) -> f64 {
    let n = 801;
    (0..n)
        .map(|j| {
            let x = -half_width + 2.0 * half_width * j as f64 / (n - 1) as f64;
            cayley(bc, Complex64::new(x, t)).map(|s| op_norm(&s)).unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max)
}

/// Enclosure of the spectrum. Regular pairs only.
pub fn enclosure(bc: &BoundaryConditions, graph: &MetricGraph, tol: RankTolerance) -> Result<EnclosureRegion> {
    bc.check_graph(graph)?;
    let class = classify_bc(bc, tol)?;
    let qw = match (class.tag, class.qw) {
        (ClassTag::Irregular, _) => return Err(Error::IrregularPencil),
        (ClassTag::RankDeficient, _) => {
            return Err(Error::RankDeficient { rank: bc.rank(tol)?, dim: bc.dim() });
        }
        (_, Some(qw)) => qw,
        (_, None) => return Err(Error::IrregularPencil),
    };
    let a_min = graph.a_min();
    let poles = cayley_poles(&qw, tol)?;
    let pole_height = poles.poles.iter().map(|p| p.k.im).fold(0.0, f64::max);
    let l_scale = 1.0 + op_norm(&qw.l) + pole_height;
    let step = 0.01 / a_min;
    let first = ((pole_height / step).floor() as usize) + 1;
    if qw.is_quasi_sectorial() {
        // the norm of S is subharmonic and bounded on Im k >= t, so its
        // supremum is attained on the line Im k = t or at infinity
        let at_inf = op_norm(&cayley_at_infinity(&qw)?);
        for j in first..first + 200_000 {
            let t = j as f64 * step;
            let sup = line_sup(bc, t, 50.0 * (l_scale + t)).max(at_inf);
            if sup * (-t * a_min).exp() < 0.5 {
                return Ok(EnclosureRegion::Parabola { t_star: t, c: 1.0 / (4.0 * t * t), big_c: t * t });
            }
        }
        return Err(Error::NoConvergence("enclosure threshold".into()));
    }
    // growth of order g at infinity: ||S(k)|| <= beta (1 + |k|)^g on Im k >= t0
    let g = qw.growth_order_at_infinity() as i32;
    let t0 = first as f64 * step;
    let mut beta: f64 = 0.0;
    for &y in &[0.0, 0.1, 1.0, 10.0, 100.0, 1000.0] {
        for &x in &[0.0, 0.1, 1.0, 10.0, 100.0, 1000.0, -0.1, -1.0, -10.0, -100.0, -1000.0] {
            let k = Complex64::new(x * l_scale, t0 + y * l_scale);
            let s = op_norm(&cayley(bc, k)?);
            beta = beta.max(s / (1.0 + k.norm()).powi(g));
        }
    }
    beta *= 2.0;
    let stretch = (1.0 + 1.0 / (SECTOR_SLOPE * SECTOR_SLOPE)).sqrt();
    let bound = |y: f64| beta * (1.0 + y * stretch).powi(g) * (-y * a_min).exp();
    // the bound decreases once y > g / a_min; check the tail on a coarse grid
    for j in first..first + 200_000 {
        let t = j as f64 * step;
        let tail_ok = (0..400).all(|i| bound(t + i as f64 * (1.0 + t) * 0.05) < 0.5);
        if tail_ok && t > g as f64 / a_min {
            return Ok(EnclosureRegion::Sector { t_star: t, slope: SECTOR_SLOPE, half_angle: 2.0 * SECTOR_SLOPE.atan() });
        }
    }
    Err(Error::NoConvergence("enclosure threshold".into()))
}
