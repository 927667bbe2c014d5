//! Tagging, encoding, decoding and verification of quantum messages.
//!
//! All operators on the tagged-message space live in the *canonical ordering*:
//! the natural `M (x) T` product basis reordered so that the first `C`
//! coordinates span the code space `C = M (x) V` (message-major, valid tag
//! index fastest) and the remaining `D` span its complement, ordered the same
//! way. In that ordering the projector onto the code space is `diag(I_C, 0)`
//! and every i-o block is a plain submatrix.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{
    eigh, ensure_finite, ensure_square, hermiticity_defect, identity, tensor_product_capped, trace,
    unitarity_defect, ComplexMatrix, ComplexVector, C64, ONE,
};
use crate::tolerance::{Tolerances, DEFAULT_MAX_DIM};

/// Dimensions of the message, tag and valid-tag spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceLayout {
    m_dim: usize,
    t_dim: usize,
    v_dim: usize,
}

impl SpaceLayout {
    pub fn new(m_dim: usize, t_dim: usize, v_dim: usize) -> Result<Self> {
        Self::with_max_dim(m_dim, t_dim, v_dim, DEFAULT_MAX_DIM)
    }

    pub fn with_max_dim(m_dim: usize, t_dim: usize, v_dim: usize, max_dim: usize) -> Result<Self> {
        if m_dim < 2 {
            return Err(Error::Layout(format!(
                "message dimension must be >= 2, got {m_dim}"
            )));
        }
        if t_dim < 2 {
            return Err(Error::Layout(format!(
                "tag dimension must be >= 2, got {t_dim}"
            )));
        }
        if v_dim < 1 || v_dim >= t_dim {
            return Err(Error::Layout(format!(
                "valid-tag dimension must satisfy 1 <= v < t, got v={v_dim}, t={t_dim}"
            )));
        }
        match m_dim.checked_mul(t_dim) {
            Some(e) if e <= max_dim => Ok(Self {
                m_dim,
                t_dim,
                v_dim,
            }),
            _ => Err(Error::Dimension(format!(
                "total dimension {m_dim}x{t_dim} exceeds the cap {max_dim}"
            ))),
        }
    }

    pub fn m_dim(&self) -> usize {
        self.m_dim
    }

    pub fn t_dim(&self) -> usize {
        self.t_dim
    }

    pub fn v_dim(&self) -> usize {
        self.v_dim
    }

    /// `C`, dimension of the code space.
    pub fn code_dim(&self) -> usize {
        self.m_dim * self.v_dim
    }

    /// `D`, dimension of the invalid-message space.
    pub fn complement_dim(&self) -> usize {
        self.m_dim * (self.t_dim - self.v_dim)
    }

    /// `E = C + D`.
    pub fn total_dim(&self) -> usize {
        self.m_dim * self.t_dim
    }

    /// `q = D / C` when it is an integer.
    pub fn q(&self) -> Option<usize> {
        let (c, d) = (self.code_dim(), self.complement_dim());
        (d % c == 0).then_some(d / c)
    }

    /// `p = E / C` when it is an integer.
    pub fn p(&self) -> Option<usize> {
        let (c, e) = (self.code_dim(), self.total_dim());
        (e % c == 0).then_some(e / c)
    }

    /// The security validators only apply when `C <= D`.
    pub fn code_not_larger(&self) -> bool {
        self.code_dim() <= self.complement_dim()
    }

    /// `P_i = diag(I_C, 0)`.
    pub fn code_projector(&self) -> ComplexMatrix {
        let mut p = ComplexMatrix::zeros(self.total_dim(), self.total_dim());
        for i in 0..self.code_dim() {
            p[(i, i)] = ONE;
        }
        p
    }

    /// `P_o = diag(0, I_D)`.
    pub fn complement_projector(&self) -> ComplexMatrix {
        identity(self.total_dim()) - self.code_projector()
    }
}

impl std::fmt::Display for SpaceLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "M={} T={} V={} C={} D={} E={}",
            self.m_dim,
            self.t_dim,
            self.v_dim,
            self.code_dim(),
            self.complement_dim(),
            self.total_dim()
        )?;
        if let Some(q) = self.q() {
            write!(f, " q={q}")?;
        }
        if let Some(p) = self.p() {
            write!(f, " p={p}")?;
        }
        Ok(())
    }
}

/// `perm[j]` is the product-basis index (`message * T + tag`) placed at
/// canonical position `j`.
pub fn canonical_basis_permutation(layout: &SpaceLayout) -> Vec<usize> {
    let (m, t, v) = (layout.m_dim, layout.t_dim, layout.v_dim);
    let valid = (0..m).flat_map(|a| (0..v).map(move |b| a * t + b));
    let invalid = (0..m).flat_map(|a| (v..t).map(move |b| a * t + b));
    valid.chain(invalid).collect()
}

pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (j, &p) in perm.iter().enumerate() {
        inv[p] = j;
    }
    inv
}

/// Re-expresses a product-basis operator in the canonical ordering.
pub fn to_canonical(layout: &SpaceLayout, product: &ComplexMatrix) -> ComplexMatrix {
    let perm = canonical_basis_permutation(layout);
    let e = perm.len();
    ComplexMatrix::from_fn(e, e, |i, j| product[(perm[i], perm[j])])
}

/// Inverse of [`to_canonical`].
pub fn to_product(layout: &SpaceLayout, canonical: &ComplexMatrix) -> ComplexMatrix {
    let inv = inverse_permutation(&canonical_basis_permutation(layout));
    let e = inv.len();
    ComplexMatrix::from_fn(e, e, |i, j| canonical[(inv[i], inv[j])])
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, Tolerances::default().density)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        ensure_square(&matrix, "density operator")?;
        ensure_finite(&matrix)?;
        let herm = hermiticity_defect(&matrix);
        if herm > tol {
            return Err(Error::Domain(format!(
                "density is not Hermitian (defect {herm:.3e})"
            )));
        }
        let tr = trace(&matrix);
        if (tr - ONE).norm() > tol {
            return Err(Error::Domain(format!("density trace is {tr}, expected 1")));
        }
        let lowest = eigh(&matrix)?.eigenvalues.first().copied().unwrap_or(0.0);
        if lowest < -tol {
            return Err(Error::Domain(format!(
                "density has negative eigenvalue {lowest:.3e}"
            )));
        }
        Ok(Self { matrix })
    }

    /// Skips validation; the caller guarantees the invariants up to roundoff.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// `|psi><psi|` for a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        let n = psi.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Domain(
                "pure state vector must be nonzero and finite".into(),
            ));
        }
        let v = psi / C64::from(n);
        Ok(Self::from_trusted(&v * v.adjoint()))
    }

    /// `|i><i|` in dimension `dim`.
    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Dimension(format!(
                "basis index {index} >= dimension {dim}"
            )));
        }
        let mut v = DVector::zeros(dim);
        v[index] = ONE;
        Self::pure(&v)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_trusted(identity(dim) / C64::from(dim as f64))
    }

    /// Maximally mixed state over the code space of `layout`, on the full space.
    pub fn maximally_mixed_code(layout: &SpaceLayout) -> Self {
        Self::from_trusted(layout.code_projector() / C64::from(layout.code_dim() as f64))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `tr(rho sigma)`; equals the fidelity when either state is pure.
    pub fn overlap(&self, other: &DensityOperator) -> f64 {
        trace(&(&self.matrix * &other.matrix)).re
    }

    /// Conjugation `A rho A^dagger` by a unitary.
    fn conjugated(&self, a: &ComplexMatrix) -> Self {
        Self::from_trusted(a * &self.matrix * a.adjoint())
    }
}

/// Key-indexed family of unitaries with `U(0) = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingSet {
    layout: SpaceLayout,
    unitaries: Vec<ComplexMatrix>,
}

impl CodingSet {
    pub fn new(layout: SpaceLayout, unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(layout, unitaries, Tolerances::default().unitary)
    }

    pub fn with_tolerance(
        layout: SpaceLayout,
        unitaries: Vec<ComplexMatrix>,
        tol: f64,
    ) -> Result<Self> {
        let e = layout.total_dim();
        let first = unitaries
            .first()
            .ok_or_else(|| Error::InsufficientFamily("coding set needs at least U(0)".into()))?;
        for (k, u) in unitaries.iter().enumerate() {
            if u.nrows() != e || u.ncols() != e {
                return Err(Error::Dimension(format!(
                    "U({k}) is {}x{}, expected {e}x{e}",
                    u.nrows(),
                    u.ncols()
                )));
            }
            ensure_finite(u)?;
            let defect = unitarity_defect(u);
            if defect > tol {
                return Err(Error::Domain(format!(
                    "U({k}) is not unitary (defect {defect:.3e})"
                )));
            }
        }
        if *first != identity(e) {
            return Err(Error::Domain("U(0) must be exactly the identity".into()));
        }
        Ok(Self { layout, unitaries })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    /// `K`.
    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    /// `ceil(log2 K)`.
    pub fn key_bits(&self) -> u32 {
        self.len().next_power_of_two().trailing_zeros()
    }

    pub fn unitary(&self, k: usize) -> Result<&ComplexMatrix> {
        self.unitaries.get(k).ok_or(Error::Key {
            key: k,
            family_size: self.len(),
        })
    }

    /// The first `keys` members.
    pub fn truncated(&self, keys: usize) -> Result<Self> {
        if keys == 0 || keys > self.len() {
            return Err(Error::InsufficientFamily(format!(
                "cannot truncate a family of {} to {keys}",
                self.len()
            )));
        }
        Ok(Self {
            layout: self.layout,
            unitaries: self.unitaries[..keys].to_vec(),
        })
    }

    /// Orthonormal basis `U(k)[:, ..C]` of the transformed code space `C_k`.
    pub fn code_basis(&self, k: usize) -> Result<ComplexMatrix> {
        let c = self.layout.code_dim();
        Ok(self.unitary(k)?.columns(0, c).into_owned())
    }
}

/// The four i-o blocks of an operator on the tagged-message space.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    /// `C x C`
    pub ii: ComplexMatrix,
    /// `C x D`
    pub io: ComplexMatrix,
    /// `D x C`
    pub oi: ComplexMatrix,
    /// `D x D`
    pub oo: ComplexMatrix,
}

impl BlockDecomposition {
    pub fn assemble(&self) -> ComplexMatrix {
        let (c, d) = (self.ii.nrows(), self.oo.nrows());
        let mut a = ComplexMatrix::zeros(c + d, c + d);
        a.view_mut((0, 0), (c, c)).copy_from(&self.ii);
        a.view_mut((0, c), (c, d)).copy_from(&self.io);
        a.view_mut((c, 0), (d, c)).copy_from(&self.oi);
        a.view_mut((c, c), (d, d)).copy_from(&self.oo);
        a
    }
}

pub fn io_decompose(layout: &SpaceLayout, a: &ComplexMatrix) -> Result<BlockDecomposition> {
    let (c, d, e) = (
        layout.code_dim(),
        layout.complement_dim(),
        layout.total_dim(),
    );
    if a.nrows() != e || a.ncols() != e {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, layout expects {e}x{e}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(BlockDecomposition {
        ii: a.view((0, 0), (c, c)).into_owned(),
        io: a.view((0, c), (c, d)).into_owned(),
        oi: a.view((c, 0), (d, c)).into_owned(),
        oo: a.view((c, c), (d, d)).into_owned(),
    })
}

/// `rho_M (x) rho_T`, in the canonical ordering.
pub fn tag_message(
    layout: &SpaceLayout,
    rho_m: &DensityOperator,
    rho_t: &DensityOperator,
) -> Result<DensityOperator> {
    let (m, t, v) = (layout.m_dim, layout.t_dim, layout.v_dim);
    if rho_m.dim() != m || rho_t.dim() != t {
        return Err(Error::Dimension(format!(
            "message/tag states are {}/{}-dimensional, layout expects {m}/{t}",
            rho_m.dim(),
            rho_t.dim()
        )));
    }
    let leak: f64 = (v..t).map(|i| rho_t.matrix()[(i, i)].re).sum();
    if leak > Tolerances::default().density {
        return Err(Error::InvalidTag(format!(
            "tag state has weight {leak:.3e} outside the valid subspace"
        )));
    }
    let product = tensor_product_capped(rho_m.matrix(), rho_t.matrix(), layout.total_dim())?;
    Ok(DensityOperator::from_trusted(to_canonical(
        layout, &product,
    )))
}

fn check_state_dim(cs: &CodingSet, rho: &DensityOperator) -> Result<()> {
    let e = cs.layout.total_dim();
    if rho.dim() != e {
        return Err(Error::Dimension(format!(
            "state is {}-dimensional, family acts on {e}",
            rho.dim()
        )));
    }
    Ok(())
}

/// `U(k) rho U(k)^dagger`.
pub fn encode(cs: &CodingSet, rho: &DensityOperator, k: usize) -> Result<DensityOperator> {
    let u = cs.unitary(k)?;
    check_state_dim(cs, rho)?;
    if k == 0 {
        return Ok(rho.clone());
    }
    Ok(rho.conjugated(u))
}

/// `U(k)^dagger rho U(k)`.
pub fn decode(cs: &CodingSet, rho: &DensityOperator, k: usize) -> Result<DensityOperator> {
    let u = cs.unitary(k)?;
    check_state_dim(cs, rho)?;
    if k == 0 {
        return Ok(rho.clone());
    }
    Ok(rho.conjugated(&u.adjoint()))
}

/// Outcome of Bob's tag measurement on a decoded state.
#[derive(Debug, Clone)]
pub struct Verification {
    /// `tr(P_i rho)`.
    pub accept_prob: f64,
    /// `P_i rho P_i / accept_prob`, on the full space.
    pub accepted_state: Option<DensityOperator>,
    /// The accepted state with the tag traced out.
    pub recovered_plaintext: Option<DensityOperator>,
}

const ACCEPT_FLOOR: f64 = 1e-12;

pub fn verify(layout: &SpaceLayout, rho: &DensityOperator) -> Result<Verification> {
    let (c, e) = (layout.code_dim(), layout.total_dim());
    if rho.dim() != e {
        return Err(Error::Dimension(format!(
            "state is {}-dimensional, layout expects {e}",
            rho.dim()
        )));
    }
    let block = rho.matrix().view((0, 0), (c, c)).into_owned();
    let accept_prob = trace(&block).re.clamp(0.0, 1.0);
    if accept_prob <= ACCEPT_FLOOR {
        return Ok(Verification {
            accept_prob,
            accepted_state: None,
            recovered_plaintext: None,
        });
    }
    let normalized = block / C64::from(accept_prob);
    let mut full = ComplexMatrix::zeros(e, e);
    full.view_mut((0, 0), (c, c)).copy_from(&normalized);

    let (m, v) = (layout.m_dim, layout.v_dim);
    let plaintext = ComplexMatrix::from_fn(m, m, |a, b| {
        (0..v).map(|t| normalized[(a * v + t, b * v + t)]).sum()
    });
    Ok(Verification {
        accept_prob,
        accepted_state: Some(DensityOperator::from_trusted(full)),
        recovered_plaintext: Some(DensityOperator::from_trusted(plaintext)),
    })
}

/// `P_i(k) = U(k) P_i U(k)^dagger`, computed as `B B^dagger` with `B` the
/// first `C` columns of `U(k)`.
pub fn transformed_projector(cs: &CodingSet, k: usize) -> Result<ComplexMatrix> {
    if k == 0 {
        cs.unitary(0)?;
        return Ok(cs.layout.code_projector());
    }
    let b = cs.code_basis(k)?;
    Ok(&b * b.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_unitary;

    fn layout221() -> SpaceLayout {
        SpaceLayout::new(2, 2, 1).unwrap()
    }

    #[test]
    fn layout_rejects_small_or_invalid_dims() {
        assert!(matches!(SpaceLayout::new(1, 2, 1), Err(Error::Layout(_))));
        assert!(matches!(SpaceLayout::new(2, 1, 1), Err(Error::Layout(_))));
        assert!(matches!(SpaceLayout::new(2, 3, 3), Err(Error::Layout(_))));
        assert!(matches!(SpaceLayout::new(2, 3, 0), Err(Error::Layout(_))));
        assert!(matches!(
            SpaceLayout::with_max_dim(64, 128, 1, 4096),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn derived_dimensions() {
        let l = SpaceLayout::new(2, 4, 1).unwrap();
        assert_eq!((l.code_dim(), l.complement_dim(), l.total_dim()), (2, 6, 8));
        assert_eq!((l.q(), l.p()), (Some(3), Some(4)));
        let l = SpaceLayout::new(2, 3, 2).unwrap();
        assert_eq!((l.code_dim(), l.complement_dim()), (4, 2));
        assert_eq!((l.q(), l.p()), (None, None));
        assert!(!l.code_not_larger());
    }

    #[test]
    fn permutation_for_two_qubits() {
        assert_eq!(canonical_basis_permutation(&layout221()), vec![0, 2, 1, 3]);
    }

    #[test]
    fn permutation_with_three_tags() {
        let l = SpaceLayout::new(2, 3, 1).unwrap();
        let perm = canonical_basis_permutation(&l);
        assert_eq!(perm, vec![0, 3, 1, 2, 4, 5]);
        // first C = 2 coordinates are the valid (tag index 0) product states
        assert!(perm[..2].iter().all(|p| p % 3 == 0));
        assert!(perm[2..].iter().all(|p| p % 3 != 0));
    }

    #[test]
    fn permutation_inverts() {
        let l = SpaceLayout::new(3, 4, 2).unwrap();
        let perm = canonical_basis_permutation(&l);
        let inv = inverse_permutation(&perm);
        let x: Vec<usize> = (0..perm.len()).map(|i| 10 * i + 3).collect();
        let forward: Vec<usize> = perm.iter().map(|&p| x[p]).collect();
        let back: Vec<usize> = inv.iter().map(|&i| forward[i]).collect();
        assert_eq!(back, x);
    }

    #[test]
    fn projectors_partition_identity() {
        let l = SpaceLayout::new(3, 3, 1).unwrap();
        assert_eq!(
            l.code_projector() + l.complement_projector(),
            identity(l.total_dim())
        );
    }

    #[test]
    fn tag_pure_message() {
        let l = layout221();
        let rho = tag_message(
            &l,
            &DensityOperator::basis_state(2, 0).unwrap(),
            &DensityOperator::basis_state(2, 0).unwrap(),
        )
        .unwrap();
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected[(0, 0)] = ONE;
        assert_eq!(rho.matrix(), &expected);
    }

    #[test]
    fn tag_mixed_message() {
        let l = layout221();
        let rho = tag_message(
            &l,
            &DensityOperator::maximally_mixed(2),
            &DensityOperator::basis_state(2, 0).unwrap(),
        )
        .unwrap();
        let expected = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::from(0.5),
            C64::from(0.5),
            C64::from(0.0),
            C64::from(0.0),
        ]));
        assert_eq!(rho.matrix(), &expected);
    }

    #[test]
    fn tag_leaking_outside_valid_subspace_is_rejected() {
        let l = layout221();
        let leaky = DensityOperator::new(ComplexMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::from(0.9),
            C64::from(0.1),
        ])))
        .unwrap();
        let err = tag_message(&l, &DensityOperator::maximally_mixed(2), &leaky).unwrap_err();
        assert!(matches!(err, Error::InvalidTag(_)));
    }

    #[test]
    fn coding_set_requires_exact_identity_first() {
        let l = layout221();
        let u = haar_unitary(4, 3);
        assert!(CodingSet::new(l, vec![u.clone()]).is_err());
        assert!(CodingSet::new(l, vec![]).is_err());
        let mut almost = identity(4);
        almost[(0, 0)] = C64::new(1.0, 1e-15);
        assert!(CodingSet::new(l, vec![almost]).is_err());
        let cs = CodingSet::new(l, vec![identity(4), u]).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs.key_bits(), 1);
    }

    #[test]
    fn coding_set_rejects_non_unitary() {
        let l = layout221();
        let bad = identity(4) * C64::from(1.01);
        assert!(matches!(
            CodingSet::new(l, vec![identity(4), bad]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn encode_with_zero_key_is_identity() {
        let l = layout221();
        let cs = CodingSet::new(l, vec![identity(4), haar_unitary(4, 1)]).unwrap();
        let rho = DensityOperator::pure(&crate::linalg::random_pure_state(
            4,
            &mut crate::linalg::seeded_rng(5),
        ))
        .unwrap();
        assert_eq!(encode(&cs, &rho, 0).unwrap(), rho);
        assert_eq!(decode(&cs, &rho, 0).unwrap(), rho);
        assert!(matches!(
            encode(&cs, &rho, 2),
            Err(Error::Key { key: 2, .. })
        ));
    }

    #[test]
    fn maximally_mixed_is_invariant() {
        let l = layout221();
        let cs = CodingSet::new(l, vec![identity(4), haar_unitary(4, 8)]).unwrap();
        let rho = DensityOperator::maximally_mixed(4);
        let out = encode(&cs, &rho, 1).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-12);
    }

    #[test]
    fn verify_edge_cases() {
        let l = layout221();
        let v = verify(&l, &DensityOperator::maximally_mixed(4)).unwrap();
        assert!((v.accept_prob - 0.5).abs() < 1e-15);

        let outside = DensityOperator::basis_state(4, 3).unwrap();
        let v = verify(&l, &outside).unwrap();
        assert_eq!(v.accept_prob, 0.0);
        assert!(v.accepted_state.is_none() && v.recovered_plaintext.is_none());
    }

    #[test]
    fn verify_recovers_plaintext() {
        let l = SpaceLayout::new(3, 4, 2).unwrap();
        let mut rng = crate::linalg::seeded_rng(11);
        let rho_m = DensityOperator::pure(&crate::linalg::random_pure_state(3, &mut rng)).unwrap();
        let tag_vec = DVector::from_vec(vec![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            ONE * 0.0,
            ONE * 0.0,
        ]);
        let rho_t = DensityOperator::pure(&tag_vec).unwrap();
        let rho = tag_message(&l, &rho_m, &rho_t).unwrap();
        let v = verify(&l, &rho).unwrap();
        assert!((v.accept_prob - 1.0).abs() < 1e-12);
        let plain = v.recovered_plaintext.unwrap();
        assert!((plain.matrix() - rho_m.matrix()).norm() < 1e-10);
    }

    #[test]
    fn io_blocks_of_code_projector() {
        let l = layout221();
        let b = io_decompose(&l, &l.code_projector()).unwrap();
        assert_eq!(b.ii, identity(2));
        assert!(b
            .io
            .iter()
            .chain(b.oi.iter())
            .chain(b.oo.iter())
            .all(|z| *z == C64::from(0.0)));
        assert!(io_decompose(&l, &identity(3)).is_err());
    }

    #[test]
    fn io_blocks_of_swap() {
        let l = layout221();
        let mut swap = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            swap[(i, i + 2)] = ONE;
            swap[(i + 2, i)] = ONE;
        }
        let b = io_decompose(&l, &swap).unwrap();
        assert_eq!(b.ii.norm(), 0.0);
        assert_eq!(b.oo.norm(), 0.0);
        assert!(b.io.norm() > 0.0 && b.oi.norm() > 0.0);
        assert_eq!(b.assemble(), swap);
    }

    #[test]
    fn transformed_projector_properties() {
        let l = SpaceLayout::new(2, 3, 1).unwrap();
        let cs = CodingSet::new(l, vec![identity(6), haar_unitary(6, 21)]).unwrap();
        assert_eq!(transformed_projector(&cs, 0).unwrap(), l.code_projector());
        let p = transformed_projector(&cs, 1).unwrap();
        assert!((&p * &p - &p).norm() < 1e-10);
        assert!(hermiticity_defect(&p) < 1e-12);
        assert!((trace(&p).re - 2.0).abs() < 1e-9);
        assert!(transformed_projector(&cs, 2).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::new(identity(2)).is_err());
        let mut neg = ComplexMatrix::zeros(2, 2);
        neg[(0, 0)] = C64::from(1.5);
        neg[(1, 1)] = C64::from(-0.5);
        assert!(DensityOperator::new(neg).is_err());
        let mut nonherm = DensityOperator::maximally_mixed(2).into_matrix();
        nonherm[(0, 1)] = C64::from(0.1);
        assert!(DensityOperator::new(nonherm).is_err());
    }
}
