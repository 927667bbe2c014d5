//! Reference routines for the integration tests.
//!
//! Nothing here calls into `qauth_core::linalg` decompositions: products are
//! naive triple loops and Hermitian spectra come from a cyclic Jacobi sweep,
//! so the tests compare the crate against an unrelated code path.

#![allow(dead_code)]

use nalgebra::DVector;
use qauth_core::linalg::{
    haar_unitary, identity, orthonormal_complement, random_pure_state, seeded_rng,
};
use qauth_core::protocol::{CodingSet, SpaceLayout};
use qauth_core::{ComplexMatrix, ComplexVector, C64};

pub fn naive_mul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = ComplexMatrix::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..a.ncols() {
                acc += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

pub fn naive_adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn naive_kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (p, q) = (b.nrows(), b.ncols());
    ComplexMatrix::from_fn(a.nrows() * p, a.ncols() * q, |i, j| {
        a[(i / p, j / q)] * b[(i % p, j % q)]
    })
}

pub fn frob(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues (ascending) of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
pub fn jacobi_eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.nrows();
    let mut a = h.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += a[(p, q)].norm_sqr();
                }
            }
        }
        if off.sqrt() < 1e-15 * frob(h).max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag < 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // unit phase e^{i phi} with apq = mag * e^{i phi}
                let phase = apq / mag;
                let theta = 0.5 * (2.0 * mag).atan2(aqq - app);
                let (c, s) = (theta.cos(), theta.sin());
                // rotation acting on columns p, q:
                // col_p' = c col_p - s conj(phase) col_q ; col_q' = s phase col_p + c col_q
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * s * phase.conj();
                    a[(k, q)] = akp * s * phase + akq * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * s * phase;
                    a[(q, k)] = apk * s * phase.conj() + aqk * c;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Singular values (descending) as square roots of the Jacobi spectrum of
/// `A^dagger A`, padded/truncated to `min(rows, cols)`.
pub fn singular_values_oracle(a: &ComplexMatrix) -> Vec<f64> {
    let gram = naive_mul(&naive_adjoint(a), a);
    let mut ev: Vec<f64> = jacobi_eigenvalues(&gram)
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    ev.reverse();
    ev.truncate(a.nrows().min(a.ncols()));
    ev
}

/// `G_ii(1) = U_ii U_ii^dagger` from raw entries.
pub fn g_ii_naive(u: &ComplexMatrix, c: usize) -> ComplexMatrix {
    let uii = u.view((0, 0), (c, c)).into_owned();
    naive_mul(&uii, &naive_adjoint(&uii))
}

/// Commutant dimension of the pair `{P, U P U^dagger}` from their principal
/// angles (two-subspace decomposition): each generic angle cluster of
/// multiplicity `n` contributes `n^2`, and each of the four intersections
/// `R∩S, R∩S⊥, R⊥∩S, R⊥∩S⊥` of dimension `m` contributes `m^2`.
pub fn two_projector_commutant_dim(u: &ComplexMatrix, c: usize) -> usize {
    let e = u.nrows();
    let cos2 = jacobi_eigenvalues(&g_ii_naive(u, c));
    let eps = 1e-8;
    let both = cos2.iter().filter(|&&l| l > 1.0 - eps).count();
    let r_only = cos2.iter().filter(|&&l| l < eps).count();
    let generic: Vec<f64> = cos2
        .iter()
        .copied()
        .filter(|&l| l >= eps && l <= 1.0 - eps)
        .collect();
    let mut clusters: Vec<usize> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for l in generic.iter() {
        if l - last > eps {
            clusters.push(1);
        } else {
            *clusters.last_mut().unwrap() += 1;
        }
        last = *l;
    }
    let generic_dim: usize = generic.len();
    let s_only = c - both - generic_dim;
    let neither = e - (both + r_only + s_only + 2 * generic_dim);
    clusters.iter().map(|n| n * n).sum::<usize>()
        + both * both
        + r_only * r_only
        + s_only * s_only
        + neither * neither
}

pub fn approx_eq_slices(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// `U(1)` fixing a random code vector `v` and Haar on its complement.
pub fn common_invariant_family(layout: SpaceLayout, seed: u64) -> (CodingSet, ComplexVector) {
    let (c, e) = (layout.code_dim(), layout.total_dim());
    let mut rng = seeded_rng(seed);
    let psi = random_pure_state(c, &mut rng);
    let mut v = DVector::zeros(e);
    v.rows_mut(0, c).copy_from(&psi);
    let v_col = ComplexMatrix::from_column_slice(e, 1, v.as_slice());
    let rest = orthonormal_complement(&v_col);
    let mut basis = ComplexMatrix::zeros(e, e);
    basis.column_mut(0).copy_from(&v);
    basis.columns_mut(1, e - 1).copy_from(&rest);
    let mut inner = identity(e);
    inner
        .view_mut((1, 1), (e - 1, e - 1))
        .copy_from(&haar_unitary(e - 1, seed + 1));
    let u = &basis * inner * basis.adjoint();
    let cs = CodingSet::new(layout, vec![identity(e), u]).unwrap();
    (cs, psi)
}

/// Random pure state supported in the code space.
pub fn random_code_state(layout: &SpaceLayout, seed: u64) -> qauth_core::DensityOperator {
    let mut rng = seeded_rng(seed);
    let psi = random_pure_state(layout.code_dim(), &mut rng);
    let mut full = DVector::zeros(layout.total_dim());
    full.rows_mut(0, layout.code_dim()).copy_from(&psi);
    qauth_core::DensityOperator::pure(&full).unwrap()
}
