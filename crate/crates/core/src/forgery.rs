//! Eve's forgery attack: she discards the message in transit and injects a
//! state of her own, hoping it decodes into the code space.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{eigh, rank_and_kernel_with, trace, ComplexMatrix, ComplexVector};
use crate::protocol::{
    io_decompose, transformed_projector, CodingSet, DensityOperator, SpaceLayout,
};
use crate::tolerance::Tolerances;
use crate::unitary_attack::clamp_probability;

#[derive(Debug, Clone)]
pub struct ForgeryReport {
    /// `C x n` orthonormal columns spanning the intersection of
    /// `ker U_io(k)^dagger` over all nonzero keys.
    pub kernel_basis: ComplexMatrix,
    pub perfect_forgery_exists: bool,
    /// Top eigenvector of `sum_k P_i(k)`.
    pub optimal_state: DensityOperator,
    /// `lambda_max(sum_k P_i(k)) / K`.
    pub optimal_p_forge: f64,
    /// Multiplicity of the top eigenvalue.
    pub top_multiplicity: usize,
}

fn ensure_family(cs: &CodingSet) -> Result<()> {
    if cs.len() < 2 {
        return Err(Error::DegenerateFamily(
            "a single public rule leaves the whole code space forgeable".into(),
        ));
    }
    Ok(())
}

/// Code-space vectors `v` with `U_io(k)^dagger v = 0` for every `k != 0`.
pub fn forgery_kernel(cs: &CodingSet, tol: &Tolerances) -> Result<ComplexMatrix> {
    ensure_family(cs)?;
    let layout = cs.layout();
    let (c, d) = (layout.code_dim(), layout.complement_dim());
    let mut stacked = ComplexMatrix::zeros((cs.len() - 1) * d, c);
    for k in 1..cs.len() {
        let blocks = io_decompose(layout, cs.unitary(k)?)?;
        stacked
            .view_mut(((k - 1) * d, 0), (d, c))
            .copy_from(&blocks.io.adjoint());
    }
    Ok(rank_and_kernel_with(&stacked, tol)?.kernel)
}

/// `(1/K) sum_k tr[P_i(k) rho_E]`.
pub fn p_forge(cs: &CodingSet, rho_e: &DensityOperator) -> Result<f64> {
    let e = cs.layout().total_dim();
    if rho_e.dim() != e {
        return Err(Error::Dimension(format!(
            "forged state is {}-dimensional, family acts on {e}",
            rho_e.dim()
        )));
    }
    let mut total = 0.0;
    for k in 0..cs.len() {
        total += trace(&(transformed_projector(cs, k)? * rho_e.matrix())).re;
    }
    clamp_probability(total / cs.len() as f64)
}

/// `sum_k P_i(k)`.
pub fn projector_sum(cs: &CodingSet) -> Result<ComplexMatrix> {
    let e = cs.layout().total_dim();
    let mut sum = ComplexMatrix::zeros(e, e);
    for k in 0..cs.len() {
        sum += transformed_projector(cs, k)?;
    }
    Ok(sum)
}

const MULTIPLICITY_TOL: f64 = 1e-9;

pub fn optimal_forgery(cs: &CodingSet, tol: &Tolerances) -> Result<ForgeryReport> {
    let kernel_basis = forgery_kernel(cs, tol)?;
    let spectrum = eigh(&projector_sum(cs)?)?;
    let n = spectrum.eigenvalues.len();
    let lambda_max = spectrum.max_eigenvalue();
    let top_multiplicity = spectrum
        .eigenvalues
        .iter()
        .filter(|&&l| lambda_max - l <= MULTIPLICITY_TOL * lambda_max.max(1.0))
        .count();
    // eigh is ascending; the first eigenvector of the top cluster is at n - multiplicity
    let top: ComplexVector = spectrum
        .eigenvectors
        .column(n - top_multiplicity)
        .into_owned();
    let optimal_state = DensityOperator::pure(&top)?;
    Ok(ForgeryReport {
        perfect_forgery_exists: kernel_basis.ncols() > 0,
        kernel_basis,
        optimal_state,
        optimal_p_forge: clamp_probability(lambda_max / cs.len() as f64)?,
        top_multiplicity,
    })
}

/// `rho_E = diag(|v><v|, 0)` for a code-space vector `v` of length `C`.
pub fn forged_state_from_code_vector(
    layout: &SpaceLayout,
    v: &ComplexVector,
) -> Result<DensityOperator> {
    let (c, e) = (layout.code_dim(), layout.total_dim());
    if v.len() != c {
        return Err(Error::Dimension(format!(
            "code vector has length {}, expected {c}",
            v.len()
        )));
    }
    let mut full: ComplexVector = DVector::zeros(e);
    full.rows_mut(0, c).copy_from(v);
    DensityOperator::pure(&full)
}
