//! Dense complex linear algebra with explicit rank tolerances.

use nalgebra::{linalg::Schur, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative tolerance for numerical rank decisions.
///
/// A singular value counts as nonzero when it exceeds
/// `rel * max(rows, cols) * reference`, where the reference is the largest
/// singular value unless stated otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankTolerance(f64);

impl RankTolerance {
    pub const DEFAULT_REL: f64 = 1e-10;

    pub fn new(rel: f64) -> Result<Self> {
        if rel.is_finite() && rel > 0.0 {
            Ok(Self(rel))
        } else {
            Err(Error::InvalidArgument(format!("rank tolerance must be positive, got {rel}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn threshold(self, rows: usize, cols: usize, reference: f64) -> f64 {
        self.0 * rows.max(cols).max(1) as f64 * reference
    }
}

impl Default for RankTolerance {
    fn default() -> Self {
        Self(Self::DEFAULT_REL)
    }
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidMatrix("matrix has non-finite entries".into()))
    }
}

pub fn ensure_square(m: &CMatrix, what: &str) -> Result<()> {
    if m.nrows() == m.ncols() {
        Ok(())
    } else {
        Err(Error::Shape(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols())))
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let r = rows.len();
    let c = if r == 0 { 0 } else { rows[0].len() };
    CMatrix::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
}

pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<CMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Shape("ragged matrix rows".into()));
    }
    Ok(CMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn to_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Thin singular value decomposition `m = U diag(s) V*`, singular values
/// sorted descending. `v` is always square (`cols x cols`); `u` has
/// `min(rows, cols)` columns, and its columns belonging to zero singular
/// values are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

/// One-sided Jacobi SVD.
///
/// nalgebra's bidiagonal SVD occasionally returns factors that do not
/// reproduce rank-deficient complex inputs, which breaks rank decisions;
/// Jacobi sweeps are slower but reliable at the sizes used here.
pub fn svd(m: &CMatrix) -> Svd {
    let (r, c) = m.shape();
    if r < c {
        // zero rows leave the rotations unchanged and keep V square
        let mut padded = CMatrix::zeros(c, c);
        padded.view_mut((0, 0), (r, c)).copy_from(m);
        let mut s = svd(&padded);
        s.u = s.u.view((0, 0), (r, r)).into_owned();
        s.singular_values.truncate(r);
        return s;
    }
    // scale to unit size; pairs of columns that are both rounding noise are
    // left alone, since their subnormal inner products give inexact phases
    let scale = m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if scale == 0.0 || c == 0 {
        return Svd { u: CMatrix::zeros(r, c), singular_values: vec![0.0; c], v: identity(c) };
    }
    let mut a = m.unscale(scale);
    let floor = (f64::EPSILON * f64::EPSILON) * a.norm_squared();
    let mut v = identity(c);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..c {
            for q in p + 1..c {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g <= floor || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase.conj();
                        mat[(i, p)] = xp * cs - xq * sn;
                        mat[(i, q)] = (xp * sn + xq * cs) * phase;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..c).map(|j| a.column(j).norm()).collect();
    let mut idx: Vec<usize> = (0..c).collect();
    idx.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let singular_values: Vec<f64> = idx.iter().map(|&j| norms[j] * scale).collect();
    let u = CMatrix::from_fn(r, c, |i, k| {
        let j = idx[k];
        if norms[j] > 0.0 {
            a[(i, j)].unscale(norms[j])
        } else {
            ZERO
        }
    });
    let v = CMatrix::from_fn(c, c, |i, k| v[(i, idx[k])]);
    Svd { u, singular_values, v }
}

/// Singular values sorted descending and the matching right singular
/// vectors as columns of a `cols x cols` matrix.
fn svd_right(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    if m.ncols() == 0 {
        return (vec![], CMatrix::zeros(0, 0));
    }
    let s = svd(m);
    let mut sv = s.singular_values;
    // pad so that trailing right vectors of a wide matrix read as kernel
    sv.resize(m.ncols(), 0.0);
    (sv, s.v)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return vec![];
    }
    svd(m).singular_values
}

/// Spectral norm, as the root of the top eigenvalue of the smaller Gram
/// matrix. Only the largest singular value is needed here, and it comes out
/// to full relative accuracy.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() < m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    let top = gram.symmetric_eigenvalues().iter().copied().fold(0.0f64, f64::max);
    top.sqrt()
}

/// Ratio of smallest to largest singular value of a square matrix; 0 for a
/// zero matrix.
pub fn rcond(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) if max > 0.0 => min / max,
        (None, None) => 1.0,
        _ => 0.0,
    }
}

pub fn numeric_rank(m: &CMatrix, tol: RankTolerance) -> Result<usize> {
    ensure_finite(m)?;
    let sv = singular_values(m);
    let reference = sv.first().copied().unwrap_or(0.0);
    Ok(count_above(&sv, tol.threshold(m.nrows(), m.ncols(), reference)))
}

/// Rank with the threshold measured against `reference` (or the largest
/// singular value, whichever is bigger). Used when a matrix is a product of
/// data of known scale and may itself be pure rounding noise.
pub fn numeric_rank_scaled(m: &CMatrix, tol: RankTolerance, reference: f64) -> Result<usize> {
    ensure_finite(m)?;
    let sv = singular_values(m);
    let r = reference.max(sv.first().copied().unwrap_or(0.0));
    Ok(count_above(&sv, tol.threshold(m.nrows(), m.ncols(), r)))
}

fn count_above(sv: &[f64], threshold: f64) -> usize {
    sv.iter().filter(|&&s| s > threshold && s > 0.0).count()
}

/// A linear subspace of C^n with an orthonormal basis stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: CMatrix,
}

impl Subspace {
    pub fn full(n: usize) -> Self {
        Self { ambient_dim: n, basis: identity(n) }
    }

    pub fn trivial(n: usize) -> Self {
        Self { ambient_dim: n, basis: CMatrix::zeros(n, 0) }
    }

    /// Column span of `cols`, truncating directions whose singular value is
    /// below the tolerance measured against `reference`.
    pub fn span(cols: &CMatrix, tol: RankTolerance, reference: f64) -> Result<Self> {
        ensure_finite(cols)?;
        let n = cols.nrows();
        if cols.ncols() == 0 || n == 0 {
            return Ok(Self::trivial(n));
        }
        let s = svd(cols);
        let smax = s.singular_values.first().copied().unwrap_or(0.0);
        let threshold = tol.threshold(cols.nrows(), cols.ncols(), reference.max(smax));
        let rank = count_above(&s.singular_values, threshold);
        let basis = s.u.columns(0, rank).into_owned();
        Ok(Self { ambient_dim: n, basis })
    }

    /// Wraps columns that are already orthonormal.
    pub fn from_orthonormal(basis: CMatrix) -> Self {
        Self { ambient_dim: basis.nrows(), basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// Image of the subspace under `m`.
    pub fn image(&self, m: &CMatrix, tol: RankTolerance) -> Result<Self> {
        if m.ncols() != self.ambient_dim {
            return Err(Error::Shape("image: dimension mismatch".into()));
        }
        Self::span(&(m * &self.basis), tol, op_norm(m))
    }

    /// Sum of two subspaces.
    pub fn sum(&self, other: &Self, tol: RankTolerance) -> Result<Self> {
        if other.ambient_dim != self.ambient_dim {
            return Err(Error::Shape("sum: dimension mismatch".into()));
        }
        let mut cols = CMatrix::zeros(self.ambient_dim, self.dim() + other.dim());
        cols.columns_mut(0, self.dim()).copy_from(&self.basis);
        cols.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        Self::span(&cols, tol, 1.0)
    }
}

/// Kernel of `m` with the rank threshold relative to its largest singular value.
pub fn kernel(m: &CMatrix, tol: RankTolerance) -> Result<Subspace> {
    kernel_scaled(m, tol, 0.0)
}

/// Kernel of `m` with the rank threshold relative to
/// `max(reference, sigma_max(m))`.
pub fn kernel_scaled(m: &CMatrix, tol: RankTolerance, reference: f64) -> Result<Subspace> {
    ensure_finite(m)?;
    let c = m.ncols();
    if c == 0 {
        return Ok(Subspace::trivial(0));
    }
    if m.nrows() == 0 {
        return Ok(Subspace::full(c));
    }
    let (sv, v) = svd_right(m);
    let r = reference.max(sv.first().copied().unwrap_or(0.0));
    let rank = count_above(&sv, tol.threshold(m.nrows(), c, r));
    let basis = v.columns(rank, c - rank).into_owned();
    Ok(Subspace { ambient_dim: c, basis })
}

/// `{x : m x in v}`. The rank threshold is measured against the norm of `m`,
/// so a preimage that is the whole space is recognised even when
/// `P_{V-perp} m` is rounding noise.
pub fn subspace_preimage(m: &CMatrix, v: &Subspace, tol: RankTolerance) -> Result<Subspace> {
    if m.nrows() != v.ambient_dim() {
        return Err(Error::Shape("preimage: dimension mismatch".into()));
    }
    let n = m.nrows();
    let p_perp = identity(n) - v.projector();
    kernel_scaled(&(p_perp * m), tol, op_norm(m))
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    ensure_square(m, "matrix")?;
    if m.nrows() == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    m.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::InvalidMatrix("matrix is singular".into()))
}

pub fn solve(m: &CMatrix, rhs: &CMatrix) -> Result<CMatrix> {
    ensure_square(m, "matrix")?;
    if m.nrows() == 0 {
        return Ok(rhs.clone());
    }
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::InvalidMatrix("matrix is singular".into()))
}

/// Moore-Penrose pseudoinverse with rank truncation.
pub fn pinv(m: &CMatrix, tol: RankTolerance) -> Result<CMatrix> {
    ensure_finite(m)?;
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok(CMatrix::zeros(c, r));
    }
    let s = svd(m);
    let smax = s.singular_values.first().copied().unwrap_or(0.0);
    let rank = count_above(&s.singular_values, tol.threshold(r, c, smax));
    let mut ut = s.u.columns(0, rank).adjoint();
    for (k, mut row) in ut.row_iter_mut().enumerate() {
        row.unscale_mut(s.singular_values[k]);
    }
    Ok(s.v.columns(0, rank) * ut)
}

/// Complex Schur decomposition `m = U T U*` with the diagonal of `T` sorted
/// ascending by (real part, imaginary part).
pub fn sorted_schur(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    ensure_finite(m)?;
    ensure_square(m, "matrix")?;
    let n = m.nrows();
    if n == 0 {
        return Ok((CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 1000 * n.max(10))
        .ok_or_else(|| Error::NoConvergence("Schur decomposition".into()))?;
    let (mut u, mut t) = schur.unpack();
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = ZERO;
        }
    }
    // bubble sort with adjacent unitary swaps
    for pass in 0..n {
        let mut swapped = false;
        for k in 0..n - 1 - pass.min(n - 1) {
            if precedes(t[(k + 1, k + 1)], t[(k, k)]) {
                swap_adjacent(&mut u, &mut t, k);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    Ok((u, t))
}

fn precedes(a: Complex64, b: Complex64) -> bool {
    a.re < b.re || (a.re == b.re && a.im < b.im)
}

fn swap_adjacent(u: &mut CMatrix, t: &mut CMatrix, k: usize) {
    let n = t.nrows();
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    let x1 = t[(k, k + 1)];
    let x2 = t22 - t11;
    let nrm = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return;
    }
    let (a, b) = (x1 / nrm, x2 / nrm);
    // Z = [[a, -conj(b)], [b, conj(a)]]
    let z = [[a, -b.conj()], [b, a.conj()]];
    for r in 0..n {
        let (p, q) = (t[(r, k)], t[(r, k + 1)]);
        t[(r, k)] = p * z[0][0] + q * z[1][0];
        t[(r, k + 1)] = p * z[0][1] + q * z[1][1];
        let (p, q) = (u[(r, k)], u[(r, k + 1)]);
        u[(r, k)] = p * z[0][0] + q * z[1][0];
        u[(r, k + 1)] = p * z[0][1] + q * z[1][1];
    }
    for c in 0..n {
        let (p, q) = (t[(k, c)], t[(k + 1, c)]);
        t[(k, c)] = z[0][0].conj() * p + z[1][0].conj() * q;
        t[(k + 1, c)] = z[0][1].conj() * p + z[1][1].conj() * q;
    }
    t[(k + 1, k)] = ZERO;
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
}

/// Eigenvalues (with repetition), sorted by (real, imaginary) part.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let (_, t) = sorted_schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Groups values closer than `rel * (1 + |mu|)` (single linkage) and returns
/// cluster means with their sizes.
pub fn cluster(values: &[Complex64], rel: f64) -> Vec<(Complex64, usize)> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = 1.0 + values[i].norm().max(values[j].norm());
            if (values[i] - values[j]).norm() <= rel * scale {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Complex64, usize)> = Vec::new();
    for i in 0..n {
        let root = find(&mut label, i);
        match groups.iter_mut().find(|g| g.0 == root) {
            Some(g) => {
                g.1 += values[i];
                g.2 += 1;
            }
            None => groups.push((root, values[i], 1)),
        }
    }
    let mut out: Vec<(Complex64, usize)> =
        groups.into_iter().map(|(_, s, c)| (s / c as f64, c)).collect();
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    out
}

/// Relative distance under which computed roots are merged.
pub const CLUSTER_REL: f64 = 1e-8;

/// A root of `det(A + s B)` with its algebraic multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PencilRoot {
    #[serde(with = "crate::json::complex")]
    pub value: Complex64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PencilSpectrum {
    Regular { finite: Vec<PencilRoot>, infinite: usize },
    Singular,
}

/// Roots of `det(A + s B)`.
///
/// Shift-and-invert: for a shift `s0` with `A + s0 B` well conditioned,
/// `A + s B = (A + s0 B)(I + (s - s0) K)` with `K = (A + s0 B)^{-1} B`, so finite
/// roots are `s0 - 1/nu` for nonzero eigenvalues `nu` of `K`; the zero
/// eigenvalues of `K` count the roots at infinity.
pub fn pencil_eigenvalues(a: &CMatrix, b: &CMatrix) -> Result<PencilSpectrum> {
    pencil_eigenvalues_tol(a, b, RankTolerance::default())
}

pub fn pencil_eigenvalues_tol(a: &CMatrix, b: &CMatrix, tol: RankTolerance) -> Result<PencilSpectrum> {
    ensure_finite(a)?;
    ensure_finite(b)?;
    ensure_square(a, "A")?;
    if a.shape() != b.shape() {
        return Err(Error::Shape("A and B must have the same shape".into()));
    }
    let d = a.nrows();
    if d == 0 {
        return Ok(PencilSpectrum::Regular { finite: vec![], infinite: 0 });
    }
    let na = op_norm(a);
    let nb = op_norm(b);
    let full = |m: &CMatrix| -> Result<bool> { Ok(numeric_rank(m, tol)? == d) };
    if nb == 0.0 {
        return Ok(if full(a)? {
            PencilSpectrum::Regular { finite: vec![], infinite: d }
        } else {
            PencilSpectrum::Singular
        });
    }
    if na == 0.0 {
        return Ok(if full(b)? {
            PencilSpectrum::Regular { finite: vec![PencilRoot { value: ZERO, multiplicity: d }], infinite: 0 }
        } else {
            PencilSpectrum::Singular
        });
    }
    let rho = na / nb;
    let mut best: Option<(f64, Complex64)> = None;
    for j in 0..12 {
        let theta = 0.731 + 2.399_963_229_728_653 * j as f64;
        let mag = rho * [1.0, 0.37, 2.9][j % 3];
        let s0 = Complex64::from_polar(mag, theta);
        let rc = rcond(&(a + b * s0));
        if best.is_none_or(|(r, _)| rc > r) {
            best = Some((rc, s0));
        }
    }
    let (rc, s0) = best.expect("candidate shifts");
    if rc <= tol.threshold(d, d, 1.0) {
        return Ok(PencilSpectrum::Singular);
    }
    let k = solve(&(a + b * s0), b)?;
    // the finite part is the limit of range K^j; one step at a time, since
    // the rank of K^d against ||K||^d loses small nonzero eigenvalues
    let mut range = Subspace::full(d);
    for _ in 0..d {
        let next = range.image(&k, tol)?;
        if next.dim() == range.dim() {
            break;
        }
        range = next;
    }
    let infinite = d - range.dim();
    let mut nus = eigenvalues(&k)?;
    nus.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    let roots: Vec<Complex64> = nus[..d - infinite].iter().map(|&nu| s0 - 1.0 / nu).collect();
    let finite = cluster(&roots, CLUSTER_REL)
        .into_iter()
        .map(|(value, multiplicity)| PencilRoot { value, multiplicity })
        .collect();
    Ok(PencilSpectrum::Regular { finite, infinite })
}

/// Length of the longest Jordan chain of `m` at `lambda`: the smallest `k`
/// with `rank (m - lambda)^k = rank (m - lambda)^{k+1}`. Ranks of powers are
/// measured against `||m - lambda||^k`, which keeps rounding noise in the
/// powers of a nilpotent block from being counted.
pub fn jordan_chain_length(m: &CMatrix, lambda: Complex64, tol: RankTolerance) -> Result<usize> {
    ensure_finite(m)?;
    ensure_square(m, "matrix")?;
    let d = m.nrows();
    let n = m - identity(d) * lambda;
    let nn = op_norm(&n);
    let mut prev = numeric_rank_scaled(&n, tol, nn)?;
    if prev == d {
        return Err(Error::NotAnEigenvalue(lambda));
    }
    let mut p = n.clone();
    for k in 1..=d {
        p = &p * &n;
        let r = numeric_rank_scaled(&p, tol, nn.powi(k as i32 + 1))?;
        if r == prev {
            return Ok(k);
        }
        prev = r;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rank_of_near_singular_diag() {
        let m = from_real_rows(&[&[1.0, 0.0], &[0.0, 1e-16]]);
        assert_eq!(numeric_rank(&m, RankTolerance::default()).unwrap(), 1);
        assert_eq!(numeric_rank(&CMatrix::zeros(3, 2), RankTolerance::default()).unwrap(), 0);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = identity(2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(numeric_rank(&m, RankTolerance::default()), Err(Error::InvalidMatrix(_))));
        assert!(RankTolerance::new(0.0).is_err());
    }

    #[test]
    fn kernel_of_wide_matrix() {
        let m = from_real_rows(&[&[1.0, 1.0, 0.0]]);
        let k = kernel(&m, RankTolerance::default()).unwrap();
        assert_eq!(k.dim(), 2);
        assert!((&m * k.basis()).norm() < 1e-14);
    }

    #[test]
    fn preimage_of_full_and_trivial() {
        let m = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let tol = RankTolerance::default();
        let all = subspace_preimage(&m, &Subspace::full(2), tol).unwrap();
        assert_eq!(all.dim(), 2);
        let ker = subspace_preimage(&m, &Subspace::trivial(2), tol).unwrap();
        assert_eq!(ker.dim(), 1);
        assert!(ker.basis()[(0, 0)].norm() > 0.999);
    }

    #[test]
    fn pencil_roots_of_simple_pencils() {
        let a = from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]);
        match pencil_eigenvalues(&a, &identity(2)).unwrap() {
            PencilSpectrum::Regular { finite, infinite } => {
                assert_eq!(infinite, 0);
                let vals: Vec<f64> = finite.iter().map(|r| r.value.re).collect();
                assert!((vals[0] + 2.0).abs() < 1e-12 && (vals[1] + 1.0).abs() < 1e-12);
            }
            PencilSpectrum::Singular => panic!("regular pencil"),
        }
        let b = from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let a = from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(pencil_eigenvalues(&a, &b).unwrap(), PencilSpectrum::Singular);
    }

    #[test]
    fn pencil_with_infinite_roots() {
        // det(A + sB) = 1 for A = I, B nilpotent
        let b = from_real_rows(&[&[0.0, 0.0], &[-1.0, 0.0]]);
        assert_eq!(
            pencil_eigenvalues(&identity(2), &b).unwrap(),
            PencilSpectrum::Regular { finite: vec![], infinite: 2 }
        );
    }

    #[test]
    fn jordan_lengths() {
        let n = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(jordan_chain_length(&n, ZERO, RankTolerance::default()).unwrap(), 2);
        let d = identity(2) * c(3.0, 0.0);
        assert_eq!(jordan_chain_length(&d, c(3.0, 0.0), RankTolerance::default()).unwrap(), 1);
        assert!(matches!(
            jordan_chain_length(&d, c(1.0, 0.0), RankTolerance::default()),
            Err(Error::NotAnEigenvalue(_))
        ));
    }

    #[test]
    fn sorted_schur_orders_and_reconstructs() {
        let m = CMatrix::from_fn(4, 4, |i, j| c((i * 3 + j) as f64 % 5.0 - 2.0, (i as f64 - j as f64) * 0.3));
        let (u, t) = sorted_schur(&m).unwrap();
        assert!((&u * &t * u.adjoint() - &m).norm() < 1e-12 * (1.0 + m.norm()));
        assert!((u.adjoint() * &u - identity(4)).norm() < 1e-12);
        for k in 0..3 {
            assert!(!precedes(t[(k + 1, k + 1)], t[(k, k)]));
            assert_eq!(t[(k + 1, k)], ZERO);
        }
    }

    #[test]
    fn jacobi_svd_reconstructs_rank_deficient_inputs() {
        // deterministic pseudo-random entries
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for r in 1..=6 {
            for cols in 1..=6 {
                for trial in 0..20 {
                    let mut m = CMatrix::from_fn(r, cols, |_, _| c(next(), next()));
                    if trial % 2 == 0 && cols > 1 {
                        let col = m.column(0) * c(0.3, 0.7);
                        m.set_column(cols - 1, &col);
                    }
                    let s = svd(&m);
                    let k = s.singular_values.len();
                    assert_eq!(k, r.min(cols));
                    assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
                    let mut us = s.u.clone();
                    for (j, mut col) in us.column_iter_mut().enumerate() {
                        col.scale_mut(s.singular_values[j]);
                    }
                    let rec = us * s.v.columns(0, k).adjoint();
                    assert!((rec - &m).norm() < 1e-13 * (1.0 + m.norm()));
                    let orth = (s.v.adjoint() * &s.v - identity(cols)).norm();
                    assert!(orth < 1e-12, "{r}x{cols} trial {trial}: {orth:e} {:?}", s.singular_values);
                }
            }
        }
    }

    #[test]
    fn clustering_merges_close_values() {
        let v = [c(1.0, 0.0), c(1.0 + 1e-12, 0.0), c(2.0, 0.0)];
        let cl = cluster(&v, CLUSTER_REL);
        assert_eq!(cl.len(), 2);
        assert_eq!(cl[0].1, 2);
    }
}
