//! Quasi-Weierstrass form of the pencil `A + sB` and the poles of the Cayley
//! transform.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::BoundaryConditions;
use crate::error::{Error, Result};
use crate::matrixcore::{
    cluster, identity, inverse, jordan_chain_length, kernel_scaled, op_norm, pinv, rcond, sorted_schur, subspace_preimage, CMatrix,
    RankTolerance, Subspace, I,
};

/// `A = F diag(L, I) G`, `B = F diag(I, N_B) G` with `L` (size `m`) and the
/// nilpotent `N_B` both upper triangular, diagonal of `L` sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiWeierstrassForm {
    pub m: usize,
    pub f: CMatrix,
    pub g: CMatrix,
    pub l: CMatrix,
    pub n_b: CMatrix,
    /// Nilpotency index of `N_B` (0 when `m = d`).
    pub nilpotency_index: usize,
}

impl QuasiWeierstrassForm {
    pub fn dim(&self) -> usize {
        self.f.nrows()
    }

    fn block(&self, top: &CMatrix, bottom: &CMatrix) -> CMatrix {
        let (d, m) = (self.dim(), self.m);
        let mut blk = CMatrix::zeros(d, d);
        blk.view_mut((0, 0), (m, m)).copy_from(top);
        blk.view_mut((m, m), (d - m, d - m)).copy_from(bottom);
        &self.f * blk * &self.g
    }

    pub fn reconstruct_a(&self) -> CMatrix {
        self.block(&self.l, &identity(self.dim() - self.m))
    }

    pub fn reconstruct_b(&self) -> CMatrix {
        self.block(&identity(self.m), &self.n_b)
    }

    /// `N_B = 0`.
    pub fn is_quasi_sectorial(&self) -> bool {
        self.nilpotency_index <= 1
    }

    /// Polynomial growth order of `S(k)` at infinity, `max(index - 1, 0)`.
    pub fn growth_order_at_infinity(&self) -> usize {
        self.nilpotency_index.saturating_sub(1)
    }

    /// `S(k) = G^{-1} diag(S(k, L, I), S(k, I, N_B)) G`.
    pub fn cayley(&self, k: Complex64) -> Result<CMatrix> {
        let (d, m) = (self.dim(), self.m);
        let ik = I * k;
        let top = -inverse(&(&self.l + identity(m) * ik))? * (&self.l - identity(m) * ik);
        let nb = &self.n_b;
        let bottom = -inverse(&(identity(d - m) + nb * ik))? * (identity(d - m) - nb * ik);
        let mut blk = CMatrix::zeros(d, d);
        blk.view_mut((0, 0), (m, m)).copy_from(&top);
        blk.view_mut((m, m), (d - m, d - m)).copy_from(&bottom);
        Ok(inverse(&self.g)? * blk * &self.g)
    }
}

/// Limit `V*` of `V_{i+1} = A^{-1}(B V_i)` from `V_0 = C^d`.
fn wong_v(a: &CMatrix, b: &CMatrix, tol: RankTolerance) -> Result<Subspace> {
    let d = a.nrows();
    let mut v = Subspace::full(d);
    for _ in 0..=d {
        let next = subspace_preimage(a, &v.image(b, tol)?, tol)?;
        if next.dim() >= v.dim() {
            return Ok(v);
        }
        v = next;
    }
    Ok(v)
}

/// Limit `W*` of `W_{i+1} = B^{-1}(A W_i)` from `W_0 = {0}`, with the number
/// of strict increases.
fn wong_w(a: &CMatrix, b: &CMatrix, tol: RankTolerance) -> Result<(Subspace, usize)> {
    let d = a.nrows();
    let mut w = Subspace::trivial(d);
    let mut steps = 0;
    for _ in 0..=d {
        let next = subspace_preimage(b, &w.image(a, tol)?, tol)?;
        if next.dim() <= w.dim() {
            return Ok((w, steps));
        }
        w = next;
        steps += 1;
    }
    Ok((w, steps))
}

/// Orthonormal basis adapted to `ker N ⊂ ker N^2 ⊂ ...`, in which a
/// nilpotent `N` is strictly upper triangular. A Schur form would do the same
/// in exact arithmetic, but its computed diagonal carries the `eps^{1/j}`
/// splitting of a size `j` Jordan block.
fn kernel_flag(n: &CMatrix, tol: RankTolerance) -> Result<CMatrix> {
    let size = n.nrows();
    let scale = op_norm(n);
    let mut basis = Subspace::trivial(size);
    let mut pow = identity(size);
    for j in 1..=size {
        if basis.dim() == size {
            break;
        }
        pow = n * pow;
        let ker = kernel_scaled(&pow, tol, scale.powi(j as i32))?;
        let fresh = (identity(size) - basis.projector()) * ker.basis();
        let fresh = Subspace::span(&fresh, tol, 1.0)?;
        basis = append(&basis, &fresh);
    }
    if basis.dim() < size {
        let rest = Subspace::span(&(identity(size) - basis.projector()), tol, 1.0)?;
        basis = append(&basis, &rest);
    }
    Ok(basis.basis().clone())
}

fn append(a: &Subspace, b: &Subspace) -> Subspace {
    let mut cols = CMatrix::zeros(a.ambient_dim(), a.dim() + b.dim());
    cols.columns_mut(0, a.dim()).copy_from(a.basis());
    cols.columns_mut(a.dim(), b.dim()).copy_from(b.basis());
    Subspace::from_orthonormal(cols)
}

/// Quasi-Weierstrass form from the Wong sequences: with `T = [V W]`,
/// `F = [BV, AW]`, `G = T^{-1}`, `AV = BV L` and `BW = AW N_B`.
pub fn quasi_weierstrass(bc: &BoundaryConditions, tol: RankTolerance) -> Result<QuasiWeierstrassForm> {
    let (a, b) = (bc.a(), bc.b());
    let d = bc.dim();
    let v = wong_v(a, b, tol)?;
    let (w, nilpotency_index) = wong_w(a, b, tol)?;
    let m = v.dim();
    if m + w.dim() != d {
        return Err(Error::IrregularPencil);
    }
    let threshold = tol.threshold(d, d, 1.0);
    let mut t = CMatrix::zeros(d, d);
    t.columns_mut(0, m).copy_from(v.basis());
    t.columns_mut(m, d - m).copy_from(w.basis());
    if d > 0 && rcond(&t) <= threshold {
        return Err(Error::IrregularPencil);
    }
    let bv = b * v.basis();
    let aw = a * w.basis();
    let mut f = CMatrix::zeros(d, d);
    f.columns_mut(0, m).copy_from(&bv);
    f.columns_mut(m, d - m).copy_from(&aw);
    if d > 0 && rcond(&f) <= threshold {
        return Err(Error::IrregularPencil);
    }
    let l_raw = pinv(&bv, tol)? * (a * v.basis());
    let n_raw = pinv(&aw, tol)? * (b * w.basis());
    let (ul, l) = sorted_schur(&l_raw)?;
    let un = kernel_flag(&n_raw, tol)?;
    let mut n_b = un.adjoint() * &n_raw * &un;
    for j in 0..n_b.ncols() {
        for i in j..n_b.nrows() {
            n_b[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    if nilpotency_index <= 1 {
        n_b.fill(Complex64::new(0.0, 0.0));
    }
    let mut u = CMatrix::zeros(d, d);
    u.view_mut((0, 0), (m, m)).copy_from(&ul);
    u.view_mut((m, m), (d - m, d - m)).copy_from(&un);
    let f = f * &u;
    let g = u.adjoint() * inverse(&t)?;
    Ok(QuasiWeierstrassForm { m, f, g, l, n_b, nilpotency_index })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CayleyPole {
    #[serde(with = "crate::json::complex")]
    pub k: Complex64,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CayleyPoleReport {
    pub poles: Vec<CayleyPole>,
    pub growth_order_at_infinity: usize,
    pub uniformly_bounded: bool,
}

/// Relative distance for merging computed eigenvalues of `L`; a Jordan
/// block of size `j` splits its eigenvalue by about `eps^{1/j}`.
const L_CLUSTER_REL: f64 = 1e-6;

/// Poles of `S(k)`: `k = i lambda` for `lambda` in the spectrum of `L`, of
/// order equal to the longest Jordan chain, except that `k = 0` has order one
/// less. The nilpotent part only contributes polynomial growth at infinity.
pub fn cayley_poles(qw: &QuasiWeierstrassForm, tol: RankTolerance) -> Result<CayleyPoleReport> {
    let diag: Vec<Complex64> = (0..qw.m).map(|i| qw.l[(i, i)]).collect();
    let scale = 1.0 + op_norm(&qw.l);
    let mut poles = Vec::new();
    for (lambda, _) in cluster(&diag, L_CLUSTER_REL) {
        let chain = jordan_chain_length(&qw.l, lambda, tol)?;
        if lambda.norm() <= 1e-10 * scale {
            if chain > 1 {
                poles.push(CayleyPole { k: Complex64::new(0.0, 0.0), order: chain - 1 });
            }
        } else {
            poles.push(CayleyPole { k: I * lambda, order: chain });
        }
    }
    Ok(CayleyPoleReport {
        poles,
        growth_order_at_infinity: qw.growth_order_at_infinity(),
        uniformly_bounded: qw.is_quasi_sectorial(),
    })
}
