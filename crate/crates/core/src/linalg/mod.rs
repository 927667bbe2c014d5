//! Dense complex-matrix primitives.
//!
//! Every operator in the crate is a [`ComplexMatrix`] (an `nalgebra` dense
//! matrix of `Complex64`). Subspaces are always carried as matrices with
//! orthonormal columns, never as bare projectors.

mod decomp;
mod haar;

pub use decomp::{
    eigh, exp_i_hermitian, orthonormal_complement, principal_log_and_exp, rank_and_kernel,
    rank_and_kernel_with, svd, RankKernel, SpectralDecomposition, SvdResult,
};
pub use haar::{haar_unitary, haar_unitary_from_rng, random_pure_state, seeded_rng};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance::DEFAULT_MAX_DIM;

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn ensure_finite(a: &ComplexMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain("matrix has non-finite entries".into()))
    }
}

pub fn ensure_square(a: &ComplexMatrix, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// `A B - B A`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// `||U^dagger U - I||_F`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    (u.adjoint() * u - identity(u.nrows())).norm()
}

/// `||A - A^dagger||_F / max(||A||_F, 1)`.
pub fn hermiticity_defect(a: &ComplexMatrix) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    (a - a.adjoint()).norm() / a.norm().max(1.0)
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// Kronecker product with the default dimension cap.
///
/// Row index convention: `i_a * b.rows + i_b`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    tensor_product_capped(a, b, DEFAULT_MAX_DIM)
}

pub fn tensor_product_capped(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    max_dim: usize,
) -> Result<ComplexMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) if r <= max_dim && c <= max_dim => Ok(a.kronecker(b)),
        _ => Err(Error::Dimension(format!(
            "tensor product {}x{} (x) {}x{} exceeds the dimension cap {max_dim}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        ))),
    }
}

/// `|v><v|`.
pub fn outer(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// Distance of `a` from the nearest scalar multiple of the identity, in Frobenius norm.
pub fn distance_from_scalar(a: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mean = trace(a) / n as f64;
    (a - identity(n) * mean).norm()
}
