//! Riesz projections by contour integration of the resolvent.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{resolvent_k, secular_matrix, GreensKernel};
use crate::boundary::BoundaryConditions;
use crate::error::{Error, Result};
use crate::graph::{EdgeFunction, MetricGraph};
use crate::matrixcore::rcond;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    /// Relative change between successive node doublings that stops the
    /// refinement.
    pub tol: f64,
    /// Smallest admissible reciprocal condition number of `Z(k)` on the contour.
    pub min_rcond: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { initial_nodes: 64, max_nodes: 8192, tol: 1e-8, min_rcond: 1e-10 }
    }
}

fn node_term(bc: &BoundaryConditions, graph: &MetricGraph, f: &EdgeFunction, z: Complex64, opts: &ProjectionOptions) -> Result<EdgeFunction> {
    let k = resolvent_k(z);
    if rcond(&secular_matrix(bc, graph, k)) < opts.min_rcond {
        return Err(Error::ContourTooClose);
    }
    GreensKernel::new(bc, graph, k)?.apply(f)
}

/// `P f = -(1/2 pi i) oint_{|z - center| = radius} (-Delta - z)^{-1} f dz`,
/// the projection onto the generalised eigenspaces inside the circle, by
/// the trapezoid rule with node doubling until the relative change is below
/// `opts.tol`.
pub fn spectral_projection(
    bc: &BoundaryConditions,
    graph: &MetricGraph,
    center: Complex64,
    radius: f64,
    f: &EdgeFunction,
    opts: ProjectionOptions,
) -> Result<EdgeFunction> {
    bc.check_graph(graph)?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    if (center.norm() - radius).abs() < 1e-6 * (1.0 + radius) {
        return Err(Error::InvalidArgument("contour passes through lambda = 0".into()));
    }
    if !graph.is_compact() {
        // the circle must not meet the essential spectrum [0, inf)
        let meets = if center.im.abs() <= radius {
            let half = (radius * radius - center.im * center.im).sqrt();
            center.re + half >= 0.0
        } else {
            false
        };
        if meets {
            return Err(Error::InvalidArgument("contour meets the essential spectrum".into()));
        }
    }
    // -(r/n) sum of e^{i theta_j} R(z_j) f at the midpoint nodes of n arcs
    let rule = |n: usize| -> Result<EdgeFunction> {
        let terms: Vec<(f64, EdgeFunction)> = (0..n)
            .into_par_iter()
            .map(|j| {
                let theta = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                let z = center + Complex64::from_polar(radius, theta);
                Ok((theta, node_term(bc, graph, f, z, &opts)?))
            })
            .collect::<Result<_>>()?;
        let mut acc = f.zeros_like();
        for (theta, u) in &terms {
            acc.axpy(Complex64::from_polar(1.0, *theta), u);
        }
        acc.scale(Complex64::new(-radius / n as f64, 0.0));
        Ok(acc)
    };
    let mut n = opts.initial_nodes.max(4);
    let mut prev = rule(n)?;
    while n < opts.max_nodes {
        n *= 2;
        let next = rule(n)?;
        let mut diff = next.clone();
        diff.axpy(Complex64::new(-1.0, 0.0), &prev);
        if diff.norm() <= opts.tol * next.norm().max(f.norm()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NoConvergence("contour quadrature".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_contour_gives_zero() {
        let g = MetricGraph::interval(1.0).unwrap();
        let bc = BoundaryConditions::dirichlet(2);
        let f = EdgeFunction::sample(&g, 1e-2, 1.0, |_, x| Complex64::new(x * (1.0 - x), 0.0)).unwrap();
        let p = spectral_projection(&bc, &g, Complex64::new(5.0, 0.0), 1.0, &f, ProjectionOptions::default()).unwrap();
        assert!(p.norm() < 1e-8 * f.norm().max(1.0));
    }
}
