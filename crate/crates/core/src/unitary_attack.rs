//! Eve's unitary attack.
//!
//! Eve applies a unitary `F` to the encoded state in transit. She passes
//! verification with certainty for every key and every message iff `F` is
//! block-diagonal and commutes with every transformed projector `P_i(k)`.
//! Security against the deterministic attack is therefore decided by the
//! dimension of that commutant: dimension one means only global phases
//! survive.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, distance_from_scalar, eigh, exp_i_hermitian, identity, rank_and_kernel_with,
    seeded_rng, svd, trace, unitarity_defect, ComplexMatrix, C64,
};
use crate::protocol::{io_decompose, transformed_projector, CodingSet, DensityOperator};
use crate::tolerance::Tolerances;

/// Blocks of `P_i(k)`: `[[G_ii, H], [H^dagger, G_oi]]`.
#[derive(Debug, Clone)]
pub struct GhOperators {
    /// `U_ii U_ii^dagger`, `C x C`.
    pub g_ii: ComplexMatrix,
    /// `U_oi U_oi^dagger`, `D x D`.
    pub g_oi: ComplexMatrix,
    /// `U_ii U_oi^dagger`, `C x D`.
    pub h: ComplexMatrix,
}

impl GhOperators {
    /// Largest elementwise deviation from 1 of (ascending eigenvalues of
    /// `U_ii^dagger U_ii`) + (descending eigenvalues of `U_oi^dagger U_oi`).
    ///
    /// Both `C x C` spectra are read off `G_ii` and `G_oi`, which share their
    /// nonzero eigenvalues with them.
    pub fn pair_sum_defect(&self) -> Result<f64> {
        let c = self.g_ii.nrows();
        let ii = eigh(&self.g_ii)?.eigenvalues;
        let mut oi = eigh(&self.g_oi)?.eigenvalues;
        oi.reverse();
        oi.resize(c.max(oi.len()), 0.0);
        Ok(ii
            .iter()
            .zip(oi.iter())
            .map(|(a, b)| (a + b - 1.0).abs())
            .fold(0.0, f64::max))
    }
}

pub fn gh_operators(cs: &CodingSet, k: usize) -> Result<GhOperators> {
    if k == 0 {
        return Err(Error::Key {
            key: k,
            family_size: cs.len(),
        });
    }
    let blocks = io_decompose(cs.layout(), cs.unitary(k)?)?;
    Ok(GhOperators {
        g_ii: &blocks.ii * blocks.ii.adjoint(),
        g_oi: &blocks.oi * blocks.oi.adjoint(),
        h: &blocks.ii * blocks.oi.adjoint(),
    })
}

fn ensure_unitary(f: &ComplexMatrix, e: usize, tol: f64) -> Result<()> {
    if f.nrows() != e || f.ncols() != e {
        return Err(Error::Dimension(format!(
            "attack is {}x{}, expected {e}x{e}",
            f.nrows(),
            f.ncols()
        )));
    }
    let defect = unitarity_defect(f);
    if defect > tol {
        return Err(Error::Domain(format!(
            "attack is not unitary (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// `Q(k) = U(k)^dagger F U(k)`.
pub fn q_operator(cs: &CodingSet, f: &ComplexMatrix, k: usize) -> Result<ComplexMatrix> {
    let u = cs.unitary(k)?;
    ensure_unitary(f, cs.layout().total_dim(), Tolerances::default().unitary)?;
    Ok(u.adjoint() * f * u)
}

/// Solution space of `[F, P_i(k)] = 0` over block-diagonal `F`.
#[derive(Debug, Clone)]
pub struct CommutantReport {
    /// Complex dimension of the solution space (at least 1).
    pub dimension: usize,
    /// Unit-Frobenius-norm block-diagonal `E x E` matrices spanning it.
    pub basis: Vec<ComplexMatrix>,
    pub is_secure: bool,
    pub extracted_attack: Option<ComplexMatrix>,
    /// Whether the extracted attack changes some decoded message beyond a phase.
    pub harmful: Option<bool>,
    /// Smallest retained singular value of the constraint system, relative.
    pub smallest_retained: Option<f64>,
    /// Largest discarded singular value of the constraint system, relative.
    pub largest_discarded: Option<f64>,
}

/// Coordinates of the `C^2 + D^2` block-diagonal unknowns, `(row, col)` in `E x E`.
fn block_diagonal_slots(c: usize, d: usize) -> Vec<(usize, usize)> {
    let ii = (0..c).flat_map(|r| (0..c).map(move |s| (r, s)));
    let oo = (0..d).flat_map(move |r| (0..d).map(move |s| (c + r, c + s)));
    ii.chain(oo).collect()
}

pub fn deterministic_attack_commutant(cs: &CodingSet, tol: &Tolerances) -> Result<CommutantReport> {
    let layout = cs.layout();
    let (c, d, e) = (
        layout.code_dim(),
        layout.complement_dim(),
        layout.total_dim(),
    );
    let slots = block_diagonal_slots(c, d);
    let unknowns = slots.len();
    let constraints = cs.len() - 1;

    let (dimension, basis_vectors, gap) = if constraints == 0 {
        (unknowns, identity(unknowns), (None, None))
    } else {
        // Row (k, i, j) of the system holds ([E_rs, P_i(k)])_{ij}, column (r, s).
        let mut system = ComplexMatrix::zeros(constraints * e * e, unknowns);
        for k in 1..cs.len() {
            let p = transformed_projector(cs, k)?;
            let offset = (k - 1) * e * e;
            for (col, &(r, s)) in slots.iter().enumerate() {
                for j in 0..e {
                    system[(offset + r * e + j, col)] += p[(s, j)];
                }
                for i in 0..e {
                    system[(offset + i * e + s, col)] -= p[(i, r)];
                }
            }
        }
        let rk = rank_and_kernel_with(&system, tol)?;
        let gap = rk.relative_gap();
        (rk.nullity(), rk.kernel, gap)
    };

    let basis: Vec<ComplexMatrix> = (0..dimension)
        .map(|j| {
            let mut b = ComplexMatrix::zeros(e, e);
            for (idx, &(r, s)) in slots.iter().enumerate() {
                b[(r, s)] = basis_vectors[(idx, j)];
            }
            b
        })
        .collect();

    if dimension == 0 {
        return Err(Error::Internal(
            "commutant is empty, but the identity always solves the system".into(),
        ));
    }

    let mut report = CommutantReport {
        dimension,
        basis,
        is_secure: dimension == 1,
        extracted_attack: None,
        harmful: None,
        smallest_retained: gap.0,
        largest_discarded: gap.1,
    };
    if let Some(attack) = extract_nonscalar_unitary(&report, cs)? {
        report.harmful = Some(attack_is_harmful(cs, &attack)?);
        report.extracted_attack = Some(attack);
    }
    Ok(report)
}

const SCALAR_TOL: f64 = 1e-6;
const EXTRACTION_SEED: u64 = 0x5eed_c0de;

fn hermitian_parts(b: &ComplexMatrix) -> [ComplexMatrix; 2] {
    let half = C64::from(0.5);
    let re = (b + b.adjoint()) * half;
    let im = (b - b.adjoint()) * C64::new(0.0, 0.5);
    [re, im]
}

/// Traceless Hermitian `h` rescaled to unit spectral radius, so that
/// `exp(i h)` is never a scalar when `h` is not.
fn normalized_generator(h: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = h.nrows();
    let centered = h - identity(n) * (trace(h) / n as f64);
    let radius = eigh(&centered)
        .ok()?
        .eigenvalues
        .iter()
        .fold(0.0_f64, |m, l| m.max(l.abs()));
    (radius > 1e-10 * h.norm().max(1e-300)).then(|| centered / C64::from(radius))
}

/// A non-scalar unitary in the commutant, or `None` when the commutant is
/// the scalars.
///
/// The generator is a generic real combination of the Hermitian parts of the
/// basis (the commutant of Hermitian projectors is closed under adjoints), so
/// a harmful attack is found whenever the commutant contains one. Individual
/// basis elements are tried if that combination is degenerate.
pub fn extract_nonscalar_unitary(
    report: &CommutantReport,
    cs: &CodingSet,
) -> Result<Option<ComplexMatrix>> {
    if report.dimension <= 1 {
        return Ok(None);
    }
    let e = cs.layout().total_dim();
    let parts: Vec<ComplexMatrix> = report.basis.iter().flat_map(hermitian_parts).collect();

    let mut rng = seeded_rng(EXTRACTION_SEED);
    let mut generic = ComplexMatrix::zeros(e, e);
    for part in &parts {
        let w: f64 = rng.random_range(-1.0..1.0);
        generic += part * C64::from(w);
    }

    let candidates = std::iter::once(generic).chain(parts);
    let mut fallback = None;
    for h in candidates {
        let Some(gen) = normalized_generator(&h) else {
            continue;
        };
        let f = exp_i_hermitian(&gen)?;
        if distance_from_scalar(&f) <= SCALAR_TOL {
            continue;
        }
        if attack_is_harmful(cs, &f)? {
            return Ok(Some(f));
        }
        fallback.get_or_insert(f);
    }
    match fallback {
        Some(f) => Ok(Some(f)),
        None => Err(Error::Internal(format!(
            "commutant reports dimension {} but every element is scalar",
            report.dimension
        ))),
    }
}

/// True when `Q_ii(k)` is not a scalar for some key.
pub fn attack_is_harmful(cs: &CodingSet, f: &ComplexMatrix) -> Result<bool> {
    for k in 0..cs.len() {
        let q = q_operator(cs, f, k)?;
        let blocks = io_decompose(cs.layout(), &q)?;
        if distance_from_scalar(&blocks.ii) > SCALAR_TOL {
            return Ok(true);
        }
    }
    Ok(false)
}

fn ensure_in_code_space(cs: &CodingSet, rho: &DensityOperator, tol: f64) -> Result<()> {
    let layout = cs.layout();
    if rho.dim() != layout.total_dim() {
        return Err(Error::Dimension(format!(
            "state is {}-dimensional, family acts on {}",
            rho.dim(),
            layout.total_dim()
        )));
    }
    let p = layout.code_projector();
    let residual = (&p * rho.matrix() * &p - rho.matrix()).norm();
    if residual > tol {
        return Err(Error::Domain(format!(
            "state is not supported in the code space (residual {residual:.3e})"
        )));
    }
    Ok(())
}

pub(crate) fn clamp_probability(p: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=1.0 + SLACK).contains(&p) {
        return Err(Error::Internal(format!("probability {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Probability that `F` goes unnoticed, averaged over keys:
/// `(1/K) sum_k tr[P_i(k) F rho(k) F^dagger]`.
pub fn p_unitary(cs: &CodingSet, f: &ComplexMatrix, rho: &DensityOperator) -> Result<f64> {
    let tol = Tolerances::default();
    ensure_in_code_space(cs, rho, tol.density)?;
    ensure_unitary(f, cs.layout().total_dim(), tol.unitary)?;
    let mut total = 0.0;
    for k in 0..cs.len() {
        let u = cs.unitary(k)?;
        let p = transformed_projector(cs, k)?;
        let encoded = u * rho.matrix() * u.adjoint();
        total += trace(&(p * f * encoded * f.adjoint())).re;
    }
    clamp_probability(total / cs.len() as f64)
}

/// `max_{k != k'} ||P_i(k) P_i(k')||_F`.
pub fn projector_cross_norm(cs: &CodingSet) -> Result<f64> {
    let projectors = (0..cs.len())
        .map(|k| transformed_projector(cs, k))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0_f64;
    for a in 0..projectors.len() {
        for b in a + 1..projectors.len() {
            worst = worst.max((&projectors[a] * &projectors[b]).norm());
        }
    }
    Ok(worst)
}

/// `F = sum_l B_l W_l B_l^dagger + (I - sum_l B_l B_l^dagger)` where `B_l`
/// spans the range of `P_i(l)` and `W_l` is the `l`-th per-block unitary.
pub fn block_preserving_attack(
    cs: &CodingSet,
    per_block: &[ComplexMatrix],
    tol: &Tolerances,
) -> Result<ComplexMatrix> {
    let layout = cs.layout();
    let (c, e) = (layout.code_dim(), layout.total_dim());
    if per_block.len() != cs.len() {
        return Err(Error::Dimension(format!(
            "{} per-block unitaries for a family of {}",
            per_block.len(),
            cs.len()
        )));
    }
    let cross = projector_cross_norm(cs)?;
    if cross > tol.commutator {
        return Err(Error::Domain(format!(
            "transformed code spaces are not mutually orthogonal (max ||P(k)P(k')|| = {cross:.3e})"
        )));
    }
    let mut f = identity(e);
    for (l, w) in per_block.iter().enumerate() {
        ensure_unitary(w, c, tol.unitary)?;
        let b = cs.code_basis(l)?;
        f += &b * (w - identity(c)) * b.adjoint();
    }
    Ok(f)
}

/// Rank classes of `H(1)` for a two-member family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HRankCase {
    /// `C = D`, full rank: `H J = J H = I`.
    SquareNonsingular,
    /// `C < D`, rank `C`: `H J = I_C`, with `H` as the left factor.
    LeftInvertible,
    /// `C > D`, rank `D`: `J H = I_D`, with `H` as the right factor.
    RightInvertible,
    /// Rank `N < min(C, D)`: `H J = V diag(I_N, 0) V^dagger`.
    Deficient,
}

#[derive(Debug, Clone)]
pub struct K2Analysis {
    pub h_rank: usize,
    pub case: HRankCase,
    /// Pseudo-inverse `W Sigma^+ V^dagger` of `H`, `D x C`.
    pub j: ComplexMatrix,
    /// Frobenius residual of the case's invertibility identity.
    pub certificate_residual: f64,
}

pub fn k2_structural_analysis(cs: &CodingSet, tol: &Tolerances) -> Result<K2Analysis> {
    if cs.len() != 2 {
        return Err(Error::Domain(format!(
            "two-member analysis needs K = 2, got {}",
            cs.len()
        )));
    }
    let h = gh_operators(cs, 1)?.h;
    let (c, d) = (h.nrows(), h.ncols());
    let dec = svd(&h)?;
    let smax = dec.singular_values.first().copied().unwrap_or(0.0);
    let rank = if smax <= tol.zero_abs {
        0
    } else {
        dec.singular_values
            .iter()
            .filter(|&&s| s > tol.rank_rel * smax)
            .count()
    };

    let mut sigma_pinv = ComplexMatrix::zeros(d, c);
    for i in 0..rank {
        sigma_pinv[(i, i)] = C64::from(1.0 / dec.singular_values[i]);
    }
    let j = &dec.right * sigma_pinv * dec.left.adjoint();

    let full = c.min(d);
    let (case, residual) = if rank == full && c == d {
        (HRankCase::SquareNonsingular, (&h * &j - identity(c)).norm())
    } else if rank == full && c < d {
        (HRankCase::LeftInvertible, (&h * &j - identity(c)).norm())
    } else if rank == full {
        (HRankCase::RightInvertible, (&j * &h - identity(d)).norm())
    } else {
        let mut partial = ComplexMatrix::zeros(c, c);
        for i in 0..rank {
            partial[(i, i)] = C64::from(1.0);
        }
        let target = &dec.left * partial * dec.left.adjoint();
        (HRankCase::Deficient, (&h * &j - target).norm())
    };
    Ok(K2Analysis {
        h_rank: rank,
        case,
        j,
        certificate_residual: residual,
    })
}

/// Residual `max_B max_k ||[B, P_i(k)]||_F` over a set of operators.
pub fn max_commutator_residual(cs: &CodingSet, ops: &[ComplexMatrix]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for k in 0..cs.len() {
        let p = transformed_projector(cs, k)?;
        for b in ops {
            worst = worst.max(commutator(b, &p).norm());
        }
    }
    Ok(worst)
}
