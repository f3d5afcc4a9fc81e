//! Vertex conditions `A psi + B psi' = 0` and the operations on them that do
//! not involve the edge lengths.

mod weierstrass;

pub use weierstrass::{cayley_poles, quasi_weierstrass, CayleyPole, CayleyPoleReport, QuasiWeierstrassForm};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::matrixcore::{
    ensure_finite, ensure_square, identity, kernel, numeric_rank, op_norm, pinv, rcond, solve, CMatrix, RankTolerance, I,
    ONE, ZERO,
};

/// Default tolerance on the Grassmann distance for equivalence tests.
pub const EQUIVALENCE_TOL: f64 = 1e-8;

/// The pair `(A, B)`; both square of the same size `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    a: CMatrix,
    b: CMatrix,
}

impl BoundaryConditions {
    pub fn new(a: CMatrix, b: CMatrix) -> Result<Self> {
        ensure_square(&a, "A")?;
        if a.shape() != b.shape() {
            return Err(Error::Shape(format!("A is {:?} but B is {:?}", a.shape(), b.shape())));
        }
        ensure_finite(&a)?;
        ensure_finite(&b)?;
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Checks that `d` matches the graph.
    pub fn check_graph(&self, graph: &MetricGraph) -> Result<()> {
        if self.dim() == graph.deficiency_index() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "boundary conditions have size {} but the graph needs {}",
                self.dim(),
                graph.deficiency_index()
            )))
        }
    }

    /// `psi = 0` at every endpoint.
    pub fn dirichlet(d: usize) -> Self {
        Self { a: identity(d), b: CMatrix::zeros(d, d) }
    }

    /// `psi' = 0` at every endpoint.
    pub fn neumann(d: usize) -> Self {
        Self { a: CMatrix::zeros(d, d), b: identity(d) }
    }

    /// Continuity plus `sum psi' = gamma psi` at a single vertex with `d`
    /// incident endpoints.
    pub fn delta(d: usize, gamma: Complex64) -> Self {
        let (a, b) = delta_block(d, gamma);
        Self { a, b }
    }

    /// Continuity of derivatives plus `sum psi = gamma psi'` at a single vertex.
    pub fn delta_prime(d: usize, gamma: Complex64) -> Self {
        let (b, a) = delta_block(d, gamma);
        Self { a, b }
    }

    /// Two endpoints joined by `psi_1 = e^{i tau} psi_2`,
    /// `psi_1' = -e^{-i tau} psi_2'`.
    pub fn pt_point(tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::InvalidArgument("tau must be finite".into()));
        }
        let e = Complex64::from_polar(1.0, tau);
        let a = CMatrix::from_row_slice(2, 2, &[ONE, -e, ZERO, ZERO]);
        let b = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, e.conj()]);
        Ok(Self { a, b })
    }

    /// `psi_1 = 0`, `psi_2 = psi_1'`: regular but not quasi-sectorial.
    pub fn intermediate() -> Self {
        let b = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, -ONE, ZERO]);
        Self { a: identity(2), b }
    }

    /// `psi_1 = 0`, `psi_1' = 0`: rank two with a singular pencil.
    pub fn totally_degenerate() -> Self {
        let a = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let b = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]);
        Self { a, b }
    }

    /// On a half-line with an attached interval: the two-endpoint PT coupling
    /// between the half-line and the interval's initial end, Dirichlet at the
    /// far end of the interval.
    pub fn pt_point_with_dirichlet_end(tau: f64) -> Result<Self> {
        let pt = Self::pt_point(tau)?;
        let mut a = CMatrix::zeros(3, 3);
        let mut b = CMatrix::zeros(3, 3);
        a.view_mut((0, 0), (2, 2)).copy_from(&pt.a);
        b.view_mut((0, 0), (2, 2)).copy_from(&pt.b);
        a[(2, 2)] = ONE;
        Ok(Self { a, b })
    }

    /// Applies a per-vertex local condition at every vertex of the graph.
    pub fn vertexwise<F>(graph: &MetricGraph, local: F) -> Self
    where
        F: Fn(usize) -> (CMatrix, CMatrix),
    {
        let d = graph.deficiency_index();
        let mut a = CMatrix::zeros(d, d);
        let mut b = CMatrix::zeros(d, d);
        let slots = graph.trace_slots();
        let mut row = 0;
        for v in graph.vertices() {
            let cols: Vec<usize> = slots
                .iter()
                .filter(|s| graph.slot_vertex(**s) == v)
                .map(|s| graph.slot_index(*s))
                .collect();
            if cols.is_empty() {
                continue;
            }
            let (la, lb) = local(cols.len());
            for r in 0..cols.len() {
                for (c, &gc) in cols.iter().enumerate() {
                    a[(row + r, gc)] = la[(r, c)];
                    b[(row + r, gc)] = lb[(r, c)];
                }
            }
            row += cols.len();
        }
        Self { a, b }
    }

    /// Kirchhoff (continuity and current conservation) at every vertex.
    pub fn kirchhoff_on(graph: &MetricGraph) -> Self {
        Self::vertexwise(graph, |n| delta_block(n, ZERO))
    }

    pub fn delta_on(graph: &MetricGraph, gamma: Complex64) -> Self {
        Self::vertexwise(graph, |n| delta_block(n, gamma))
    }

    pub fn delta_prime_on(graph: &MetricGraph, gamma: Complex64) -> Self {
        Self::vertexwise(graph, |n| {
            let (b, a) = delta_block(n, gamma);
            (a, b)
        })
    }

    /// Same subspace, new representative `(C A, C B)`.
    pub fn left_multiply(&self, c: &CMatrix) -> Result<Self> {
        Self::new(c * &self.a, c * &self.b)
    }

    /// `[A B]`, a `d x 2d` matrix whose kernel is the subspace M.
    pub fn stacked(&self) -> CMatrix {
        let d = self.dim();
        let mut ab = CMatrix::zeros(d, 2 * d);
        ab.columns_mut(0, d).copy_from(&self.a);
        ab.columns_mut(d, d).copy_from(&self.b);
        ab
    }

    pub fn rank(&self, tol: RankTolerance) -> Result<usize> {
        numeric_rank(&self.stacked(), tol)
    }

    /// Whether `AB* = BA*` to relative accuracy `tol`.
    pub fn is_hermitian_symmetric(&self, tol: f64) -> bool {
        let c = &self.a * self.b.adjoint() - &self.b * self.a.adjoint();
        op_norm(&c) <= tol * (op_norm(&self.a) * op_norm(&self.b) + 1.0)
    }
}

/// Rows `e_j - e_{j+1}` in `A`, then `-gamma e_1` in `A` and all ones in `B`.
fn delta_block(n: usize, gamma: Complex64) -> (CMatrix, CMatrix) {
    let mut a = CMatrix::zeros(n, n);
    let mut b = CMatrix::zeros(n, n);
    for j in 0..n.saturating_sub(1) {
        a[(j, j)] = ONE;
        a[(j, j + 1)] = -ONE;
    }
    if n > 0 {
        a[(n - 1, 0)] = -gamma;
        for j in 0..n {
            b[(n - 1, j)] = ONE;
        }
    }
    (a, b)
}

/// Orthogonal projector onto `M = Ker [A B]` in `C^{2d}`.
pub fn projection_onto_m(bc: &BoundaryConditions, tol: RankTolerance) -> Result<CMatrix> {
    let d = bc.dim();
    let ab = bc.stacked();
    let gram = &ab * ab.adjoint();
    let rank = numeric_rank(&gram, tol)?;
    if rank < d {
        return Err(Error::RankDeficient { rank, dim: d });
    }
    let p_perp = ab.adjoint() * solve(&gram, &ab)?;
    Ok(identity(2 * d) - p_perp)
}

/// `||P_M1 - P_M2||` in the spectral norm.
pub fn grassmann_distance(a: &BoundaryConditions, b: &BoundaryConditions, tol: RankTolerance) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Shape("boundary conditions of different size".into()));
    }
    Ok(op_norm(&(projection_onto_m(a, tol)? - projection_onto_m(b, tol)?)))
}

/// Whether two pairs define the same subspace.
pub fn equivalent(a: &BoundaryConditions, b: &BoundaryConditions, tol: f64) -> Result<bool> {
    Ok(grassmann_distance(a, b, RankTolerance::default())? <= tol)
}

/// `S(k) = -(A + ikB)^{-1}(A - ikB)`.
pub fn cayley(bc: &BoundaryConditions, k: Complex64) -> Result<CMatrix> {
    let d = bc.dim();
    let plus = bc.a() + bc.b() * (I * k);
    let minus = bc.a() - bc.b() * (I * k);
    if d > 0 && rcond(&plus) <= RankTolerance::default().threshold(d, d, 1.0) {
        return Err(Error::PoleOfCayley(k));
    }
    Ok(-solve(&plus, &minus)?)
}

/// A pair with Cayley transform `s` at `k`: `A = -(S - I)/2`,
/// `B = (S + I)/(2ik)`.
pub fn recover_from_cayley(s: &CMatrix, k: Complex64) -> Result<BoundaryConditions> {
    ensure_square(s, "S")?;
    if k == ZERO {
        return Err(Error::ZeroK);
    }
    let d = s.nrows();
    let a = -(s - identity(d)) * Complex64::new(0.5, 0.0);
    let b = (s + identity(d)) / (I * k * 2.0);
    BoundaryConditions::new(a, b)
}

/// Coarse classification of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassTag {
    SelfAdjoint,
    QuasiSectorial,
    RegularNonQuasiSectorial,
    Irregular,
    RankDeficient,
}

impl std::fmt::Display for ClassTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ClassTag::SelfAdjoint => "self_adjoint",
            ClassTag::QuasiSectorial => "quasi_sectorial",
            ClassTag::RegularNonQuasiSectorial => "regular_non_quasi_sectorial",
            ClassTag::Irregular => "irregular",
            ClassTag::RankDeficient => "rank_deficient",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcClass {
    pub tag: ClassTag,
    /// Present for the three regular classes.
    pub qw: Option<QuasiWeierstrassForm>,
}

/// Classifies `(A, B)`:
/// rank-deficient if `AA* + BB*` is singular; irregular if `A*A + B*B` is
/// singular or the pencil is singular; quasi-sectorial if the nilpotent part
/// vanishes; self-adjoint if in addition `AB* = BA*`.
pub fn classify_bc(bc: &BoundaryConditions, tol: RankTolerance) -> Result<BcClass> {
    let d = bc.dim();
    let (a, b) = (bc.a(), bc.b());
    let rows = a * a.adjoint() + b * b.adjoint();
    if numeric_rank(&rows, tol)? < d {
        return Ok(BcClass { tag: ClassTag::RankDeficient, qw: None });
    }
    let cols = a.adjoint() * a + b.adjoint() * b;
    if numeric_rank(&cols, tol)? < d {
        return Ok(BcClass { tag: ClassTag::Irregular, qw: None });
    }
    let qw = match quasi_weierstrass(bc, tol) {
        Ok(qw) => qw,
        Err(Error::IrregularPencil) => return Ok(BcClass { tag: ClassTag::Irregular, qw: None }),
        Err(e) => return Err(e),
    };
    let tag = if !qw.is_quasi_sectorial() {
        ClassTag::RegularNonQuasiSectorial
    } else if bc.is_hermitian_symmetric(tol.value()) {
        ClassTag::SelfAdjoint
    } else {
        ClassTag::QuasiSectorial
    };
    Ok(BcClass { tag, qw: Some(qw) })
}

/// Canonical form `(L + P, P⊥)`: `P` the orthogonal projector onto `Ker B`
/// and `L = P⊥ L P⊥`. Returns `None` when no such representative exists.
pub fn canonical_pl(bc: &BoundaryConditions, tol: RankTolerance) -> Result<Option<(CMatrix, CMatrix)>> {
    let d = bc.dim();
    let rank = bc.rank(tol)?;
    if rank < d {
        return Err(Error::RankDeficient { rank, dim: d });
    }
    let p = kernel(bc.b(), tol)?.projector();
    let p_perp = identity(d) - &p;
    let m = kernel(&bc.stacked(), tol)?;
    let x1 = m.basis().rows(0, d).into_owned();
    let x2 = m.basis().rows(d, d).into_owned();
    let rank_p = numeric_rank(&p, tol)?;
    if numeric_rank(&x1, tol)? != d - rank_p {
        return Ok(None);
    }
    let l = -(&p_perp * x2 * pinv(&x1, tol)?);
    let l = &p_perp * l * &p_perp;
    let candidate = BoundaryConditions::new(&l + &p, p_perp.clone())?;
    if grassmann_distance(&candidate, bc, tol)? <= EQUIVALENCE_TOL {
        Ok(Some((p, l)))
    } else {
        Ok(None)
    }
}
