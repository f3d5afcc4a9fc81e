//! Explicit functions showing that the resolvent grows faster than allowed
//! for a generator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{edge_transfer, GreensKernel};
use crate::boundary::{cayley, classify_bc, BoundaryConditions, ClassTag};
use crate::error::{Error, Result};
use crate::graph::{simpson_weights, EdgeFunction, EdgeRef, Endpoint, MetricGraph};
use crate::matrixcore::{inverse, kernel, op_norm, CMatrix, CVector, RankTolerance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NqsWitness {
    pub kappa: f64,
    /// `|<R psi_alpha, psi_beta>| / (||psi_alpha|| ||psi_beta||)` at
    /// `lambda = -kappa^2`, a lower bound for the resolvent norm.
    pub quotient: f64,
    /// `||S(i kappa) T(i kappa)||`.
    pub neumann_bound: f64,
}

/// `H(i kappa) = int Phi^T Phi` for `k = i kappa`.
fn gram(graph: &MetricGraph, kappa: f64) -> CMatrix {
    let d = graph.deficiency_index();
    let (ne, ni) = (graph.n_external(), graph.n_internal());
    let mut h = CMatrix::zeros(d, d);
    for i in 0..ne {
        h[(i, i)] = Complex64::new(1.0 / (2.0 * kappa), 0.0);
    }
    for (j, e) in graph.internal_edges().iter().enumerate() {
        let a = e.length;
        let diag = -(-2.0 * kappa * a).exp_m1() / (2.0 * kappa);
        let off = a * (-kappa * a).exp();
        let (p, q) = (ne + j, ne + ni + j);
        h[(p, p)] = Complex64::new(diag, 0.0);
        h[(q, q)] = Complex64::new(diag, 0.0);
        h[(p, q)] = Complex64::new(off, 0.0);
        h[(q, p)] = Complex64::new(off, 0.0);
    }
    h
}

/// `psi(x) = sum over slots of coef e^{-kappa (distance to the slot's end)}`.
fn exponential_profile(graph: &MetricGraph, coef: &CVector, kappa: f64) -> Result<EdgeFunction> {
    let h = (1.0 / (40.0 * kappa)).min(graph.a_min() / 400.0);
    let ext = 40.0 / kappa;
    let (ne, ni) = (graph.n_external(), graph.n_internal());
    EdgeFunction::sample(graph, h, ext, |e, x| match e {
        EdgeRef::External(i) => coef[i] * (-kappa * x).exp(),
        EdgeRef::Internal(j) => {
            let a = graph.internal_edges()[j].length;
            coef[ne + j] * (-kappa * x).exp() + coef[ne + ni + j] * (-kappa * (a - x)).exp()
        }
    })
}

/// Lower bound for `||R(-kappa^2)||` for regular, non-quasi-sectorial pairs.
///
/// With `v` such that `N_B v != 0 = N_B^2 v`, take `alpha = H^{-1} G^{-1} v`
/// and `beta = H^{-1} G^* N_B v`; then `<R psi_alpha, psi_beta>` is dominated
/// by `-<v + 2 kappa N_B v, N_B v> / (2 kappa)` and the quotient decays only
/// like `1/kappa`.
pub fn resolvent_witness_nqs(bc: &BoundaryConditions, graph: &MetricGraph, kappa: f64) -> Result<NqsWitness> {
    bc.check_graph(graph)?;
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidArgument("kappa must be positive".into()));
    }
    let tol = RankTolerance::default();
    let class = classify_bc(bc, tol)?;
    let qw = match (class.tag, class.qw) {
        (ClassTag::RegularNonQuasiSectorial, Some(qw)) => qw,
        (tag, _) => {
            return Err(Error::WrongClass { expected: ClassTag::RegularNonQuasiSectorial.to_string(), actual: tag.to_string() })
        }
    };
    let k = Complex64::new(0.0, kappa);
    let s = cayley(bc, k)?;
    let neumann_bound = op_norm(&(&s * edge_transfer(graph, k)));
    if !graph.is_star() && neumann_bound >= 0.5 {
        return Err(Error::KappaTooSmall(kappa));
    }
    let (d, m) = (qw.dim(), qw.m);
    let n = &qw.n_b;
    let idx = qw.nilpotency_index;
    let mut top = crate::matrixcore::identity(d - m);
    for _ in 0..idx - 1 {
        top = &top * n;
    }
    // direction where N^{idx-1} is largest, pushed down to N^{idx-2}
    let w = crate::matrixcore::svd(&top).v.column(0).into_owned();
    let mut vn = w;
    for _ in 0..idx - 2 {
        vn = n * vn;
    }
    let vn = vn.unscale(vn.norm());
    let mut v = CVector::zeros(d);
    v.rows_mut(m, d - m).copy_from(&vn);
    let mut nv = CVector::zeros(d);
    nv.rows_mut(m, d - m).copy_from(&(n * &vn));
    let hinv = inverse(&gram(graph, kappa))?;
    let alpha = &hinv * inverse(&qw.g)? * &v;
    let beta = &hinv * qw.g.adjoint() * &nv;
    let psi_a = exponential_profile(graph, &alpha, kappa)?;
    let psi_b = exponential_profile(graph, &beta, kappa)?;
    let u = GreensKernel::new(bc, graph, k)?.apply(&psi_a)?;
    let quotient = u.inner(&psi_b).norm() / (psi_a.norm() * psi_b.norm());
    Ok(NqsWitness { kappa, quotient, neumann_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IrregularWitness {
    /// Star graph with a singular pencil: every `lambda` is an eigenvalue.
    EverythingIsSpectrum,
    /// `||psi_v|| / ||phi_v||` with `(-Delta - k^2) psi_v = phi_v`.
    Quotient {
        #[serde(with = "crate::json::complex")]
        k: Complex64,
        quotient: f64,
    },
}

/// `(psi_v, phi_v)` built on `v` in `Ker A ∩ Ker B`: near every endpoint,
/// `psi = v_slot (cos(k(a - x)) - 1)/k^2` for `x < a = a_min/2` and
/// `phi = v_slot`, both zero elsewhere.
pub fn irregular_witness_functions(
    bc: &BoundaryConditions,
    graph: &MetricGraph,
    k: Complex64,
    h: f64,
    ext_length: f64,
) -> Result<(EdgeFunction, EdgeFunction)> {
    bc.check_graph(graph)?;
    if k.norm() == 0.0 {
        return Err(Error::ZeroK);
    }
    let d = bc.dim();
    let mut stacked = CMatrix::zeros(2 * d, d);
    stacked.rows_mut(0, d).copy_from(bc.a());
    stacked.rows_mut(d, d).copy_from(bc.b());
    let common = kernel(&stacked, RankTolerance::default())?;
    if common.dim() == 0 {
        return Err(Error::InvalidArgument("Ker A ∩ Ker B is trivial".into()));
    }
    let v: CVector = common.basis().column(0).into_owned();
    let a = 0.5 * graph.a_min();
    let profile = move |x: f64| if x < a { ((k * (a - x)).cos() - 1.0) / (k * k) } else { Complex64::new(0.0, 0.0) };
    let indicator = move |x: f64| if x < a { 1.0 } else { 0.0 };
    let slot_of = |e: EdgeRef, end: Endpoint| graph.slot_index(crate::graph::TraceSlot { edge: e, endpoint: end });
    let build = |near: &dyn Fn(f64) -> Complex64| {
        EdgeFunction::sample(graph, h, ext_length, |e, x| match e {
            EdgeRef::External(_) => v[slot_of(e, Endpoint::Initial)] * near(x),
            EdgeRef::Internal(j) => {
                let len = graph.internal_edges()[j].length;
                v[slot_of(e, Endpoint::Initial)] * near(x) + v[slot_of(e, Endpoint::Terminal)] * near(len - x)
            }
        })
    };
    let psi = build(&profile)?;
    let phi = build(&|x| Complex64::new(indicator(x), 0.0))?;
    Ok((psi, phi))
}

/// Lower bound `||psi_v|| / ||phi_v||` for `||R(k^2)||` on an irregular pair;
/// grows like `e^{Im k a_min / 2} / |k|^{5/2}`.
pub fn resolvent_witness_irregular(bc: &BoundaryConditions, graph: &MetricGraph, k: Complex64) -> Result<IrregularWitness> {
    bc.check_graph(graph)?;
    let tol = RankTolerance::default();
    let class = classify_bc(bc, tol)?;
    if class.tag != ClassTag::Irregular {
        return Err(Error::WrongClass { expected: ClassTag::Irregular.to_string(), actual: class.tag.to_string() });
    }
    if graph.is_star() {
        return Ok(IrregularWitness::EverythingIsSpectrum);
    }
    if k.norm() == 0.0 {
        return Err(Error::ZeroK);
    }
    // both functions are multiples of fixed profiles on [0, a_min/2] and the
    // unit vector v spreads them over the endpoints without overlap
    let a = 0.5 * graph.a_min();
    let n = 8001;
    let hx = a / (n - 1) as f64;
    let w = simpson_weights(n, hx);
    let psi_sq: f64 = (0..n)
        .map(|j| {
            let x = j as f64 * hx;
            w[j] * (((k * (a - x)).cos() - 1.0) / (k * k)).norm_sqr()
        })
        .sum();
    Ok(IrregularWitness::Quotient { k, quotient: (psi_sq / a).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nqs_quotient_decays_like_inverse_kappa() {
        let g = MetricGraph::interval(1.0).unwrap();
        let bc = BoundaryConditions::intermediate();
        let q10 = resolvent_witness_nqs(&bc, &g, 10.0).unwrap().quotient;
        let q40 = resolvent_witness_nqs(&bc, &g, 40.0).unwrap().quotient;
        let slope = (q40 / q10).ln() / 4f64.ln();
        assert!(slope > -1.3 && slope < -0.8, "slope {slope}");
    }

    #[test]
    fn nqs_requires_class() {
        let g = MetricGraph::interval(1.0).unwrap();
        assert!(matches!(
            resolvent_witness_nqs(&BoundaryConditions::dirichlet(2), &g, 10.0),
            Err(Error::WrongClass { .. })
        ));
    }

    #[test]
    fn irregular_witness_is_resolvent_image() {
        let g = MetricGraph::interval(1.0).unwrap();
        let bc = BoundaryConditions::totally_degenerate();
        let k = Complex64::new(0.5, 3.0);
        // phi jumps at a_min/2, so the linear interpolation error is O(h)
        let (psi, phi) = irregular_witness_functions(&bc, &g, k, 1e-4, 1.0).unwrap();
        let u = GreensKernel::new(&bc, &g, k).unwrap().apply(&phi).unwrap();
        let mut diff = u;
        diff.axpy(Complex64::new(-1.0, 0.0), &psi);
        assert!(diff.norm() < 1e-3 * psi.norm(), "{} vs {}", diff.norm(), psi.norm());
        match resolvent_witness_irregular(&bc, &g, k).unwrap() {
            IrregularWitness::Quotient { quotient, .. } => {
                assert!((quotient - psi.norm() / phi.norm()).abs() < 1e-2 * quotient);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn irregular_star_everything() {
        let g = MetricGraph::star(2).unwrap();
        assert_eq!(
            resolvent_witness_irregular(&BoundaryConditions::totally_degenerate(), &g, Complex64::new(0.0, 1.0)).unwrap(),
            IrregularWitness::EverythingIsSpectrum
        );
    }
}
