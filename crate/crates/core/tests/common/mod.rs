//! Random fixtures shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::Rng;

use qgraph_core::boundary::BoundaryConditions;
use qgraph_core::matrixcore::{identity, CMatrix};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_matrix(rng: &mut StdRng, r: usize, cols: usize) -> CMatrix {
    DMatrix::from_fn(r, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// A random matrix shifted towards the identity so it is safely invertible.
pub fn random_invertible(rng: &mut StdRng, d: usize) -> CMatrix {
    random_matrix(rng, d, d) + identity(d) * c(2.0, 0.0)
}

pub fn random_unitary(rng: &mut StdRng, d: usize) -> CMatrix {
    random_matrix(rng, d, d).qr().q()
}

/// `A = F diag(L, I) G`, `B = F diag(I, N) G` with `L` of size `m` and `N`
/// strictly upper triangular. Returns the pair and the eigenvalues of `L`.
pub fn random_regular_pair(rng: &mut StdRng, d: usize, m: usize) -> (BoundaryConditions, Vec<Complex64>) {
    let f = random_invertible(rng, d);
    let g = random_invertible(rng, d);
    let mut top_a = CMatrix::zeros(d, d);
    let mut top_b = CMatrix::zeros(d, d);
    let mut spectrum = Vec::new();
    // L upper triangular with well separated diagonal
    for i in 0..m {
        let lambda = c(2.0 * i as f64 - 1.5 + rng.gen_range(-0.3..0.3), rng.gen_range(-1.0..1.0));
        spectrum.push(lambda);
        top_a[(i, i)] = lambda;
        for j in i + 1..m {
            top_a[(i, j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        top_b[(i, i)] = c(1.0, 0.0);
    }
    for i in m..d {
        top_a[(i, i)] = c(1.0, 0.0);
        for j in i + 1..d {
            top_b[(i, j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let a = &f * top_a * &g;
    let b = &f * top_b * &g;
    (BoundaryConditions::new(a, b).expect("square"), spectrum)
}

/// Self-adjoint pair `(C(U - I), C i(U + I))` with `U` unitary; about a third
/// of the draws give `U` an eigenvalue `-1`, so that `B` is singular.
pub fn random_self_adjoint(rng: &mut StdRng, d: usize) -> BoundaryConditions {
    let v = random_unitary(rng, d);
    let phases = DMatrix::from_fn(d, d, |i, j| {
        if i != j {
            c(0.0, 0.0)
        } else {
            Complex64::from_polar(1.0, rng.gen_range(-3.0..3.0))
        }
    });
    let mut u = &v * phases * v.adjoint();
    if rng.gen_range(0..3) == 0 {
        let w = v.column(0).into_owned();
        // reflect the first eigenvector to -1
        let lambda = (w.adjoint() * &u * &w)[(0, 0)];
        u += &w * w.adjoint() * (c(-1.0, 0.0) - lambda);
    }
    let cm = random_invertible(rng, d);
    let id = identity(d);
    let a = &cm * (&u - &id);
    let b = &cm * (&u + &id) * c(0.0, 1.0);
    BoundaryConditions::new(a, b).expect("square")
}

/// Greedy matching of two multisets of complex numbers; the largest distance
/// between matched elements, or `None` for different sizes.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut left: Vec<Complex64> = b.to_vec();
    let mut worst: f64 = 0.0;
    for x in a {
        let (idx, dist) = left
            .iter()
            .enumerate()
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        worst = worst.max(dist);
        left.swap_remove(idx);
    }
    Some(worst)
}
