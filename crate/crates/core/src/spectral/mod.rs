//! Spectra, resolvents and enclosures for the Laplacian `-Delta(A, B)` on a
//! metric graph.
//!
//! Eigenvalues `lambda = k^2` with `k != 0` are zeros of `det Z(k)` where
//! `Z(k) = A + ikB + (A - ikB) T(k)`; away from Cayley poles
//! `det Z(k) = det(A + ikB) det(I - S(k) T(k))`.

mod enclosure;
mod greens;
mod projection;
mod roots;
mod witness;

pub use enclosure::{enclosure, EnclosureRegion};
pub use greens::{resolvent_k, GreensKernel};
pub use projection::{spectral_projection, ProjectionOptions};
pub use roots::{compact_spectrum, star_point_spectrum, RootOptions, SearchRegion, SpectralPoint, SpectralReport};
pub use witness::{
    irregular_witness_functions, resolvent_witness_irregular, resolvent_witness_nqs, IrregularWitness, NqsWitness,
};

use num_complex::Complex64;

use crate::boundary::{cayley, BoundaryConditions};
use crate::error::Result;
use crate::graph::MetricGraph;
use crate::matrixcore::{identity, solve, CMatrix, I};

/// `T(k)`: couples the two ends of every internal edge by `e^{ik a_j}`.
pub fn edge_transfer(graph: &MetricGraph, k: Complex64) -> CMatrix {
    transfer_with(graph, |a| (I * k * a).exp())
}

/// `dT/dk`.
fn edge_transfer_derivative(graph: &MetricGraph, k: Complex64) -> CMatrix {
    transfer_with(graph, |a| I * a * (I * k * a).exp())
}

fn transfer_with<F: Fn(f64) -> Complex64>(graph: &MetricGraph, entry: F) -> CMatrix {
    let d = graph.deficiency_index();
    let (ne, ni) = (graph.n_external(), graph.n_internal());
    let mut t = CMatrix::zeros(d, d);
    for (j, e) in graph.internal_edges().iter().enumerate() {
        let v = entry(e.length);
        t[(ne + j, ne + ni + j)] = v;
        t[(ne + ni + j, ne + j)] = v;
    }
    t
}

/// `Z(k) = A + ikB + (A - ikB) T(k)`; `Z(k) c = 0` is the boundary condition
/// for `psi = alpha e^{ikx} + beta e^{ik(a-x)}` on the edges.
pub fn secular_matrix(bc: &BoundaryConditions, graph: &MetricGraph, k: Complex64) -> CMatrix {
    let ik = I * k;
    let minus = bc.a() - bc.b() * ik;
    bc.a() + bc.b() * ik + minus * edge_transfer(graph, k)
}

fn secular_matrix_derivative(bc: &BoundaryConditions, graph: &MetricGraph, k: Complex64) -> CMatrix {
    let ik = I * k;
    let t = edge_transfer(graph, k);
    let dt = edge_transfer_derivative(graph, k);
    bc.b() * I - bc.b() * I * t + (bc.a() - bc.b() * ik) * dt
}

/// `(d/dk) log det Z(k) = tr(Z^{-1} Z')`.
pub fn log_derivative(bc: &BoundaryConditions, graph: &MetricGraph, k: Complex64) -> Result<Complex64> {
    let z = secular_matrix(bc, graph, k);
    let dz = secular_matrix_derivative(bc, graph, k);
    Ok(solve(&z, &dz)?.trace())
}

/// `det(I - S(k) T(k))`.
pub fn secular(bc: &BoundaryConditions, graph: &MetricGraph, k: Complex64) -> Result<Complex64> {
    bc.check_graph(graph)?;
    let s = cayley(bc, k)?;
    let d = bc.dim();
    Ok((identity(d) - s * edge_transfer(graph, k)).determinant())
}
