use std::cmp::Ordering;

use nalgebra::{Schur, SymmetricEigen, QR};

use super::{
    ensure_square, hermiticity_defect, identity, unitarity_defect, ComplexMatrix, C64, ZERO,
};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

const MAX_ITERATIONS: usize = 10_000;
const MAX_SWEEPS: usize = 100;
/// Largest accepted residual of an eigen or Schur factorisation.
const FACTOR_RESIDUAL_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;
const BRANCH_TOL: f64 = 1e-9;

/// Full singular value decomposition `A = left * diag(singular_values) * right^dagger`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `rows x rows` unitary.
    pub left: ComplexMatrix,
    /// `min(rows, cols)` values, descending.
    pub singular_values: Vec<f64>,
    /// `cols x cols` unitary.
    pub right: ComplexMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let (m, n) = (self.left.nrows(), self.right.nrows());
        let mut sigma = ComplexMatrix::zeros(m, n);
        for (i, s) in self.singular_values.iter().enumerate() {
            sigma[(i, i)] = C64::from(*s);
        }
        &self.left * sigma * self.right.adjoint()
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, lambda) in self.eigenvalues.iter().enumerate() {
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= *lambda;
            }
        }
        scaled * v.adjoint()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Numerical rank and right null space of a matrix.
#[derive(Debug, Clone)]
pub struct RankKernel {
    pub rank: usize,
    /// Orthonormal columns spanning the right null space; `cols - rank` of them.
    pub kernel: ComplexMatrix,
    /// Singular values, descending (`min(rows, cols)` of them).
    pub singular_values: Vec<f64>,
}

impl RankKernel {
    pub fn nullity(&self) -> usize {
        self.kernel.ncols()
    }

    /// `(smallest retained, largest discarded)` singular values relative to the
    /// largest one. Either side is `None` when empty.
    pub fn relative_gap(&self) -> (Option<f64>, Option<f64>) {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            return (None, None);
        }
        let kept = self
            .rank
            .checked_sub(1)
            .and_then(|i| self.singular_values.get(i))
            .map(|s| s / smax);
        let dropped = self.singular_values.get(self.rank).map(|s| s / smax);
        (kept, dropped)
    }
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal));
    idx
}

fn select_columns(m: &ComplexMatrix, order: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), order.len(), |i, j| m[(i, order[j])])
}

/// One-sided (Hestenes) Jacobi SVD. Returns the column norms of `A V`
/// (descending), `V` (`cols x cols`, columns in the same order) and `A V`.
///
/// Tall input is first reduced to its `R` factor. Jacobi keeps small singular
/// values accurate relative to the matrix norm even for rank-deficient input,
/// which is where the kernel computations of this crate live.
fn jacobi_svd(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix, ComplexMatrix)> {
    let (m, n) = (a.nrows(), a.ncols());
    let (q, mut w) = if m > n {
        let qr = QR::new(a.clone());
        (Some(qr.q()), qr.r())
    } else {
        (None, a.clone())
    };
    let mut v = identity(n);
    let tol = (w.nrows().max(1) as f64).sqrt() * f64::EPSILON;
    // columns this small are rounding noise; rotating them never settles
    let negligible = (f64::EPSILON * w.norm()).powi(2);
    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for r in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(r).norm_squared();
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = w.column(p).dotc(&w.column(r));
                let g = gamma.norm();
                if g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                rotate_columns(&mut w, p, r, c, c * t, phase);
                rotate_columns(&mut v, p, r, c, c * t, phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            routine: "svd",
            max_iterations: MAX_SWEEPS,
            dim: m.max(n),
        });
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let order = descending(&norms);
    let values = order.iter().map(|&j| norms[j]).collect();
    let w = select_columns(&w, &order);
    let w = match q {
        Some(q) => q * w,
        None => w,
    };
    Ok((values, select_columns(&v, &order), w))
}

/// `(x_p, x_r) <- (c x_p - s e^{-i phi} x_r, s x_p + c e^{-i phi} x_r)`.
fn rotate_columns(x: &mut ComplexMatrix, p: usize, r: usize, c: f64, s: f64, phase: C64) {
    let back = phase.conj();
    for i in 0..x.nrows() {
        let xp = x[(i, p)];
        let xr = x[(i, r)] * back;
        x[(i, p)] = xp * c - xr * s;
        x[(i, r)] = xp * s + xr * c;
    }
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns of `q`.
pub fn orthonormal_complement(q: &ComplexMatrix) -> ComplexMatrix {
    let (m, r) = (q.nrows(), q.ncols());
    if r >= m {
        return ComplexMatrix::zeros(m, 0);
    }
    let mut stacked = ComplexMatrix::zeros(m, r + m);
    stacked.columns_mut(0, r).copy_from(q);
    stacked.columns_mut(r, m).copy_from(&identity(m));
    let full = QR::new(stacked).q();
    full.columns(r, m - r).into_owned()
}

fn hstack(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    let (m, n) = (a.nrows(), a.ncols());
    let (mut values, right, w) = jacobi_svd(a)?;
    values.truncate(m.min(n));
    // left vectors only for singular values above the noise floor; the rest
    // complete the basis
    let floor = values.first().copied().unwrap_or(0.0) * f64::EPSILON * m.max(n) as f64;
    let kept = values.iter().take_while(|&&s| s > floor && s > 0.0).count();
    let mut u = ComplexMatrix::zeros(m, kept);
    for j in 0..kept {
        u.set_column(j, &(w.column(j) / C64::from(values[j])));
    }
    let left = hstack(&u, &orthonormal_complement(&u));
    Ok(SvdResult {
        left,
        singular_values: values,
        right,
    })
}

/// Singular values (descending, `min(rows, cols)` of them) and a full
/// `cols x cols` right factor.
fn right_factor(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 {
        return Ok((Vec::new(), identity(n)));
    }
    let (mut values, right, _) = jacobi_svd(a)?;
    values.truncate(m.min(n));
    Ok((values, right))
}

fn rank_kernel_impl(a: &ComplexMatrix, rel_tol: f64, abs_zero: f64) -> Result<RankKernel> {
    let (values, right) = right_factor(a)?;
    let smax = values.first().copied().unwrap_or(0.0);
    let rank = if smax <= abs_zero {
        0
    } else {
        values.iter().filter(|&&s| s > rel_tol * smax).count()
    };
    let n = a.ncols();
    Ok(RankKernel {
        rank,
        kernel: right.columns(rank, n - rank).into_owned(),
        singular_values: values,
    })
}

/// Rank counts singular values above `rel_tol * sigma_max`; a zero matrix has rank 0.
pub fn rank_and_kernel(a: &ComplexMatrix, rel_tol: f64) -> Result<RankKernel> {
    rank_kernel_impl(a, rel_tol, 0.0)
}

/// As [`rank_and_kernel`] with `tol.rank_rel`, and treating matrices whose
/// largest singular value is below `tol.zero_abs` as zero.
pub fn rank_and_kernel_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<RankKernel> {
    rank_kernel_impl(a, tol.rank_rel, tol.zero_abs)
}

pub fn eigh(a: &ComplexMatrix) -> Result<SpectralDecomposition> {
    let n = ensure_square(a, "eigh input")?;
    let defect = hermiticity_defect(a);
    if defect > HERMITIAN_TOL {
        return Err(Error::Domain(format!(
            "matrix is not Hermitian (relative defect {defect:.3e})"
        )));
    }
    let sym = (a + a.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_ITERATIONS).ok_or(
        Error::NonConvergence {
            routine: "eigh",
            max_iterations: MAX_ITERATIONS,
            dim: n,
        },
    )?;
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let residual = (diagonal_similarity(
        &eig.eigenvectors,
        &values.iter().map(|&l| C64::from(l)).collect::<Vec<_>>(),
    ) - a)
        .norm();
    if residual > FACTOR_RESIDUAL_TOL * a.norm().max(1.0)
        || unitarity_defect(&eig.eigenvectors) > FACTOR_RESIDUAL_TOL
    {
        return Err(Error::NonConvergence {
            routine: "eigh",
            max_iterations: MAX_ITERATIONS,
            dim: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(Ordering::Equal));
    Ok(SpectralDecomposition {
        eigenvalues: order.iter().map(|&i| values[i]).collect(),
        eigenvectors: select_columns(&eig.eigenvectors, &order),
    })
}

fn diagonal_similarity(basis: &ComplexMatrix, diag: &[C64]) -> ComplexMatrix {
    let mut scaled = basis.clone();
    for (j, d) in diag.iter().enumerate() {
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= *d;
        }
    }
    scaled * basis.adjoint()
}

/// `exp(i h)` for Hermitian `h`.
pub fn exp_i_hermitian(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let spectrum = eigh(h)?;
    let phases: Vec<C64> = spectrum
        .eigenvalues
        .iter()
        .map(|&l| C64::from_polar(1.0, l))
        .collect();
    Ok(diagonal_similarity(&spectrum.eigenvectors, &phases))
}

/// `exp(s log u)` with the principal logarithm (eigenphases in `(-pi, pi]`).
///
/// Fails with [`Error::DegenerateBranch`] when an eigenvalue sits within
/// `1e-9` (in phase) of `-1`, where the branch choice is ambiguous.
pub fn principal_log_and_exp(u: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    let n = ensure_square(u, "unitary")?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!(
            "interpolation parameter {s} outside [0, 1]"
        )));
    }
    let defect = unitarity_defect(u);
    if defect > UNITARY_TOL {
        return Err(Error::Domain(format!(
            "matrix is not unitary (defect {defect:.3e})"
        )));
    }
    let schur =
        Schur::try_new(u.clone(), f64::EPSILON, MAX_ITERATIONS).ok_or(Error::NonConvergence {
            routine: "schur",
            max_iterations: MAX_ITERATIONS,
            dim: n,
        })?;
    let (q, t) = schur.unpack();
    // u is normal, so its Schur form must be diagonal
    let mut strict_upper = t.upper_triangle();
    strict_upper.fill_diagonal(ZERO);
    if strict_upper.norm() > FACTOR_RESIDUAL_TOL || unitarity_defect(&q) > FACTOR_RESIDUAL_TOL {
        return Err(Error::NonConvergence {
            routine: "schur",
            max_iterations: MAX_ITERATIONS,
            dim: n,
        });
    }
    let mut powers = vec![ZERO; n];
    for (j, p) in powers.iter_mut().enumerate() {
        let phase = t[(j, j)].arg();
        let distance = std::f64::consts::PI - phase.abs();
        if distance < BRANCH_TOL {
            return Err(Error::DegenerateBranch { distance });
        }
        *p = C64::from_polar(1.0, s * phase);
    }
    Ok(diagonal_similarity(&q, &powers))
}
