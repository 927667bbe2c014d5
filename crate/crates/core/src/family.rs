//! Coding-family generators, security-condition validators, the subspace
//! overlap measure and the overlap sweep.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forgery::{forgery_kernel, optimal_forgery};
use crate::linalg::{
    eigh, haar_unitary, haar_unitary_from_rng, identity, principal_log_and_exp,
    rank_and_kernel_with, seeded_rng, ComplexMatrix, C64, ONE,
};
use crate::protocol::{io_decompose, CodingSet, DensityOperator, SpaceLayout};
use crate::tolerance::Tolerances;
use crate::unitary_attack::{
    block_preserving_attack, deterministic_attack_commutant, gh_operators, p_unitary,
    projector_cross_norm, GhOperators,
};

/// Numeric evidence attached to a condition check.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Dimensions {
        code: usize,
        complement: usize,
    },
    /// Smallest rank found against the rank required.
    Rank {
        achieved: usize,
        required: usize,
    },
    /// Smallest adjacent-eigenvalue gap, relative to the largest eigenvalue.
    EigenGap(f64),
    /// Largest `|<v, w>|` between eigenvectors of two eigenbases.
    MaxOverlap(f64),
    /// Largest cross-Gram norm between ranges, with the smallest range rank.
    Subspaces {
        max_cross: f64,
        min_rank: usize,
    },
    KernelDimension(usize),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Dimensions { code, complement } => write!(f, "C={code} D={complement}"),
            Witness::Rank { achieved, required } => write!(f, "rank {achieved}/{required}"),
            Witness::EigenGap(g) => write!(f, "min gap {g:.3e}"),
            Witness::MaxOverlap(o) => write!(f, "max overlap {o:.6}"),
            Witness::Subspaces {
                max_cross,
                min_rank,
            } => write!(f, "max cross {max_cross:.3e}, min rank {min_rank}"),
            Witness::KernelDimension(n) => write!(f, "kernel dimension {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: String,
    pub passed: bool,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, index: usize) -> Option<&ConditionCheck> {
        self.checks.get(index)
    }

    fn push(&mut self, name: &str, passed: bool, witness: Witness) {
        self.checks.push(ConditionCheck {
            name: name.to_string(),
            passed,
            witness,
        });
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.checks.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let mark = if c.passed { "pass" } else { "FAIL" };
            write!(f, "{} [{mark}] ({})", c.name, c.witness)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- generators

pub fn generate_generic_family(layout: &SpaceLayout, keys: usize, seed: u64) -> Result<CodingSet> {
    if keys == 0 {
        return Err(Error::InsufficientFamily("K must be at least 1".into()));
    }
    let e = layout.total_dim();
    let unitaries = std::iter::once(identity(e))
        .chain((1..keys).map(|k| haar_unitary(e, seed.wrapping_add(k as u64))))
        .collect();
    CodingSet::new(*layout, unitaries)
}

/// Cyclic shift by `k` of the `p = E / C` blocks of size `C`; block 0 is the
/// code space, so `P_i(k)` projects onto block `k`.
pub fn generate_orthogonal_family(layout: &SpaceLayout, keys: usize) -> Result<CodingSet> {
    let c = layout.code_dim();
    let p = layout.p().ok_or_else(|| {
        Error::Layout(format!(
            "C={c} does not divide E={}; no orthogonal family",
            layout.total_dim()
        ))
    })?;
    if keys == 0 || keys > p {
        return Err(Error::Layout(format!(
            "orthogonal family needs 1 <= K <= p = {p}, got K={keys}"
        )));
    }
    let e = layout.total_dim();
    let unitaries = (0..keys)
        .map(|k| {
            let mut u = ComplexMatrix::zeros(e, e);
            for block in 0..p {
                let target = (block + k) % p;
                for r in 0..c {
                    u[(target * c + r, block * c + r)] = ONE;
                }
            }
            u
        })
        .collect();
    CodingSet::new(*layout, unitaries)
}

/// Every `U(k)` maps the code space onto itself: `diag(Haar_C, Haar_D)`.
pub fn generate_block_diagonal_family(
    layout: &SpaceLayout,
    keys: usize,
    seed: u64,
) -> Result<CodingSet> {
    if keys == 0 {
        return Err(Error::InsufficientFamily("K must be at least 1".into()));
    }
    let (c, d, e) = (
        layout.code_dim(),
        layout.complement_dim(),
        layout.total_dim(),
    );
    let mut rng = seeded_rng(seed);
    let mut unitaries = vec![identity(e)];
    for _ in 1..keys {
        let mut u = ComplexMatrix::zeros(e, e);
        u.view_mut((0, 0), (c, c))
            .copy_from(&haar_unitary_from_rng(c, &mut rng));
        u.view_mut((c, c), (d, d))
            .copy_from(&haar_unitary_from_rng(d, &mut rng));
        unitaries.push(u);
    }
    CodingSet::new(*layout, unitaries)
}

const ROTATION_ATTEMPTS: usize = 16;
const ANGLE_MARGIN: f64 = 0.1;

/// `C` distinct angles, one per cell of a uniform grid on
/// `(0.1, pi/2 - 0.1)`, jittered inside the central 80% of each cell.
fn jittered_angles<R: Rng>(c: usize, rng: &mut R) -> Vec<f64> {
    let width = (FRAC_PI_2 - 2.0 * ANGLE_MARGIN) / c as f64;
    (0..c)
        .map(|r| {
            let u: f64 = rng.random();
            ANGLE_MARGIN + width * (r as f64 + 0.1 + 0.8 * u)
        })
        .collect()
}

/// One rotation between the code space and the `block`-th `C`-dimensional
/// slice of the complement, conjugated on the code side by a Haar unitary.
fn block_rotation<R: Rng>(layout: &SpaceLayout, block: usize, rng: &mut R) -> ComplexMatrix {
    let (c, e) = (layout.code_dim(), layout.total_dim());
    let angles = jittered_angles(c, rng);
    let v = haar_unitary_from_rng(c, rng);
    let cos = ComplexMatrix::from_diagonal(
        &angles
            .iter()
            .map(|a| C64::from(a.cos()))
            .collect::<Vec<_>>()
            .into(),
    );
    let sin = ComplexMatrix::from_diagonal(
        &angles
            .iter()
            .map(|a| C64::from(a.sin()))
            .collect::<Vec<_>>()
            .into(),
    );
    let w = c + block * c;
    let mut u = identity(e);
    u.view_mut((0, 0), (c, c))
        .copy_from(&(&v * &cos * v.adjoint()));
    u.view_mut((0, w), (c, c)).copy_from(&(-(&v * &sin)));
    u.view_mut((w, 0), (c, c)).copy_from(&(&sin * v.adjoint()));
    u.view_mut((w, w), (c, c)).copy_from(&cos);
    u
}

/// `q + 1` unitaries, `U(k)` rotating the code space into the `k`-th slice of
/// the complement, re-drawn until the unequal-dimension conditions hold.
pub fn generate_block_rotation_family(
    layout: &SpaceLayout,
    seed: u64,
    tol: &Tolerances,
) -> Result<CodingSet> {
    let q = match layout.q() {
        Some(q) if q >= 2 => q,
        _ => {
            return Err(Error::Layout(format!(
                "block rotation needs D = qC with q >= 2 ({layout})"
            )))
        }
    };
    let e = layout.total_dim();
    let mut last_report = String::new();
    for attempt in 0..ROTATION_ATTEMPTS {
        let mut rng =
            seeded_rng(seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let unitaries = std::iter::once(identity(e))
            .chain((0..q).map(|block| block_rotation(layout, block, &mut rng)))
            .collect();
        let cs = CodingSet::new(*layout, unitaries)?;
        let report = validate_unequal_dims(&cs, tol)?;
        if report.passed() {
            return Ok(cs);
        }
        last_report = report.to_string();
    }
    Err(Error::Generation {
        attempts: ROTATION_ATTEMPTS,
        last_report,
    })
}

// ---------------------------------------------------------------- validators

fn relative_min_gap(values: &[f64]) -> f64 {
    let top = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if top <= 0.0 {
        return 0.0;
    }
    values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / top)
        .fold(f64::INFINITY, f64::min)
}

fn max_basis_overlap(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a.adjoint() * b)
        .iter()
        .fold(0.0_f64, |m, z| m.max(z.norm()))
}

struct KeyAnalysis {
    gh: GhOperators,
    h_rank: usize,
    gap: f64,
    eigenbasis: ComplexMatrix,
}

fn analyse_key(cs: &CodingSet, k: usize, tol: &Tolerances) -> Result<KeyAnalysis> {
    let gh = gh_operators(cs, k)?;
    let h_rank = rank_and_kernel_with(&gh.h, tol)?.rank;
    let spectrum = eigh(&gh.g_ii)?;
    Ok(KeyAnalysis {
        h_rank,
        gap: relative_min_gap(&spectrum.eigenvalues),
        eigenbasis: spectrum.eigenvectors,
        gh,
    })
}

/// Conditions for `C = D` families, checked on `U(1)` and `U(2)`.
pub fn validate_equal_dims(cs: &CodingSet, tol: &Tolerances) -> Result<ConditionReport> {
    if cs.len() < 3 {
        return Err(Error::InsufficientFamily(format!(
            "equal-dimension conditions need U(1) and U(2), family has K={}",
            cs.len()
        )));
    }
    let layout = cs.layout();
    let (c, d) = (layout.code_dim(), layout.complement_dim());
    let one = analyse_key(cs, 1, tol)?;
    let two = analyse_key(cs, 2, tol)?;

    let mut report = ConditionReport::default();
    report.push(
        "dim C = dim C-perp",
        c == d,
        Witness::Dimensions {
            code: c,
            complement: d,
        },
    );
    let min_rank = one.h_rank.min(two.h_rank);
    report.push(
        "rank H(1), H(2) maximal",
        min_rank == c,
        Witness::Rank {
            achieved: min_rank,
            required: c,
        },
    );
    let gap = one.gap.min(two.gap);
    report.push(
        "G_ii(1), G_ii(2) non-degenerate",
        gap > tol.eigen_gap,
        Witness::EigenGap(gap),
    );
    let overlap = max_basis_overlap(&one.eigenbasis, &two.eigenbasis);
    report.push(
        "G_ii(1), G_ii(2) share no eigenvector",
        overlap < 1.0 - tol.overlap,
        Witness::MaxOverlap(overlap),
    );
    Ok(report)
}

/// Orthonormal eigenvectors of the `C` largest eigenvalues of `G_oi(k)`, and
/// the numerical rank of `G_oi(k)`.
fn g_oi_range(gh: &GhOperators, c: usize, tol: &Tolerances) -> Result<(ComplexMatrix, usize)> {
    let spectrum = eigh(&gh.g_oi)?;
    let d = spectrum.eigenvalues.len();
    let take = c.min(d);
    let range = spectrum.eigenvectors.columns(d - take, take).into_owned();
    let rank = rank_and_kernel_with(&gh.g_oi, tol)?.rank;
    Ok((range, rank))
}

/// Conditions for `D = qC` families with `K = q + 1`.
pub fn validate_unequal_dims(cs: &CodingSet, tol: &Tolerances) -> Result<ConditionReport> {
    let layout = cs.layout();
    let (c, d) = (layout.code_dim(), layout.complement_dim());
    let q = match layout.q() {
        Some(q) if c < d => q,
        _ => {
            return Err(Error::Domain(format!(
                "unequal-dimension conditions need C < D with D = qC ({layout})"
            )))
        }
    };
    if cs.len() != q + 1 {
        return Err(Error::Domain(format!(
            "unequal-dimension conditions need K = q + 1 = {}, got {}",
            q + 1,
            cs.len()
        )));
    }
    let keys: Vec<KeyAnalysis> = (1..cs.len())
        .map(|k| analyse_key(cs, k, tol))
        .collect::<Result<_>>()?;

    let mut report = ConditionReport::default();
    let min_rank = keys.iter().map(|a| a.h_rank).min().unwrap_or(0);
    report.push(
        "rank H(k) maximal for all k > 0",
        min_rank == c,
        Witness::Rank {
            achieved: min_rank,
            required: c,
        },
    );
    let gap = keys.iter().map(|a| a.gap).fold(f64::INFINITY, f64::min);
    report.push(
        "G_ii(k) non-degenerate for all k > 0",
        gap > tol.eigen_gap,
        Witness::EigenGap(gap),
    );
    let mut best_pair = f64::INFINITY;
    for r in 0..keys.len() {
        for s in r + 1..keys.len() {
            best_pair = best_pair.min(max_basis_overlap(&keys[r].eigenbasis, &keys[s].eigenbasis));
        }
    }
    report.push(
        "some G_ii(r), G_ii(s) share no eigenvector",
        best_pair < 1.0 - tol.overlap,
        Witness::MaxOverlap(best_pair),
    );
    let ranges: Vec<(ComplexMatrix, usize)> = keys
        .iter()
        .map(|a| g_oi_range(&a.gh, c, tol))
        .collect::<Result<_>>()?;
    let mut max_cross = 0.0_f64;
    for j in 0..ranges.len() {
        for k in j + 1..ranges.len() {
            max_cross = max_cross.max((ranges[j].0.adjoint() * &ranges[k].0).norm());
        }
    }
    let min_range_rank = ranges.iter().map(|r| r.1).min().unwrap_or(0);
    report.push(
        "ranges of G_oi(k) orthogonal and C-dimensional",
        max_cross < tol.overlap && min_range_rank == c,
        Witness::Subspaces {
            max_cross,
            min_rank: min_range_rank,
        },
    );
    Ok(report)
}

/// Forgery resistance: (a) every `U_io(k)^dagger` has rank `C` (sufficient),
/// (b) the kernels of the `U_io(k)^dagger` intersect trivially (exact).
pub fn validate_forgery(cs: &CodingSet, tol: &Tolerances) -> Result<ConditionReport> {
    let kernel = forgery_kernel(cs, tol)?;
    let c = cs.layout().code_dim();
    let mut min_rank = usize::MAX;
    for k in 1..cs.len() {
        let blocks = io_decompose(cs.layout(), cs.unitary(k)?)?;
        min_rank = min_rank.min(rank_and_kernel_with(&blocks.io.adjoint(), tol)?.rank);
    }
    let mut report = ConditionReport::default();
    report.push(
        "rank U_io(k)^dagger = C for all k > 0",
        min_rank == c,
        Witness::Rank {
            achieved: min_rank,
            required: c,
        },
    );
    report.push(
        "kernel intersection is trivial",
        kernel.ncols() == 0,
        Witness::KernelDimension(kernel.ncols()),
    );
    Ok(report)
}

/// `dim(ker G_oi(j) ∩ ker G_oi(k))`.
pub fn shared_g_oi_kernel_dim(
    cs: &CodingSet,
    j: usize,
    k: usize,
    tol: &Tolerances,
) -> Result<usize> {
    let a = gh_operators(cs, j)?.g_oi;
    let b = gh_operators(cs, k)?.g_oi;
    let d = a.nrows();
    let mut stacked = ComplexMatrix::zeros(2 * d, d);
    stacked.view_mut((0, 0), (d, d)).copy_from(&a);
    stacked.view_mut((d, 0), (d, d)).copy_from(&b);
    Ok(rank_and_kernel_with(&stacked, tol)?.nullity())
}

// ---------------------------------------------------------------- overlap

/// `(2 / (K (K-1) C)) sum_{k<k'} tr[P_i(k) P_i(k')]`: 1 for coincident
/// families, 0 for mutually orthogonal ones.
pub fn overlap_measure(cs: &CodingSet) -> Result<f64> {
    let keys = cs.len();
    if keys < 2 {
        return Err(Error::InsufficientFamily(
            "overlap needs at least two code spaces".into(),
        ));
    }
    let bases: Vec<ComplexMatrix> = (0..keys).map(|k| cs.code_basis(k)).collect::<Result<_>>()?;
    let mut total = 0.0;
    for a in 0..keys {
        for b in a + 1..keys {
            // tr[B_a B_a^dag B_b B_b^dag] = ||B_a^dag B_b||_F^2
            total += (bases[a].adjoint() * &bases[b]).norm_squared();
        }
    }
    let c = cs.layout().code_dim() as f64;
    Ok(total * 2.0 / (keys as f64 * (keys as f64 - 1.0) * c))
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub s: f64,
    pub overlap: f64,
    pub optimal_p_forge: f64,
    pub commutant_dimension: usize,
    /// Block-attack success when the interpolated code spaces are orthogonal.
    pub p_unitary_block_bound: Option<f64>,
}

/// Interpolates from the all-identity family (`s = 0`) to the cyclic-shift
/// orthogonal family (`s = 1`) along `U(k, s) = exp(s log(e^{i phi} V(k)))`.
///
/// The seeded global phase `phi` is a fraction in `[0.1, 0.4)` of `2 pi / p`,
/// which keeps every eigenvalue of `e^{i phi} V(k)` (a rotated `p`-th root of
/// unity) away from `-1` without changing any projector at `s = 1`.
pub fn sweep_overlap(
    layout: &SpaceLayout,
    keys: usize,
    steps: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<SweepPoint>> {
    if steps < 2 {
        return Err(Error::Domain(format!(
            "sweep needs at least 2 steps, got {steps}"
        )));
    }
    if keys < 2 {
        return Err(Error::InsufficientFamily("sweep needs K >= 2".into()));
    }
    let target = generate_orthogonal_family(layout, keys)?;
    let p = layout.p().expect("orthogonal family implies integer p");
    let mut rng = seeded_rng(seed);
    let fraction = 0.1 + 0.3 * rng.random::<f64>();
    let phase = C64::from_polar(1.0, 2.0 * PI / p as f64 * fraction);
    let c = layout.code_dim();
    let per_block: Vec<ComplexMatrix> = (0..keys)
        .map(|_| haar_unitary_from_rng(c, &mut rng))
        .collect();
    let rotated: Vec<ComplexMatrix> = target.unitaries().iter().map(|v| v * phase).collect();
    let e = layout.total_dim();

    (0..steps)
        .into_par_iter()
        .map(|i| {
            let s = if i + 1 == steps {
                1.0
            } else {
                i as f64 / (steps - 1) as f64
            };
            let mut unitaries = vec![identity(e)];
            for (k, v) in rotated.iter().enumerate().skip(1) {
                let u = if i == 0 {
                    identity(e)
                } else {
                    principal_log_and_exp(v, s).map_err(|err| match err {
                        Error::DegenerateBranch { distance } => Error::SweepBranch {
                            key: k,
                            s,
                            distance,
                        },
                        other => other,
                    })?
                };
                unitaries.push(u);
            }
            let cs = CodingSet::with_tolerance(*layout, unitaries, tol.unitary)?;
            let overlap = overlap_measure(&cs)?;
            let forgery = optimal_forgery(&cs, tol)?;
            let commutant = deterministic_attack_commutant(&cs, tol)?;
            let p_unitary_block_bound = if projector_cross_norm(&cs)? < tol.commutator {
                let f = block_preserving_attack(&cs, &per_block, tol)?;
                Some(p_unitary(
                    &cs,
                    &f,
                    &DensityOperator::maximally_mixed_code(layout),
                )?)
            } else {
                None
            };
            Ok(SweepPoint {
                s,
                overlap,
                optimal_p_forge: forgery.optimal_p_forge,
                commutant_dimension: commutant.dimension,
                p_unitary_block_bound,
            })
        })
        .collect()
}

/// Endpoint contract of a sweep: `(overlap, P^f) = (1, 1)` at `s = 0` and
/// `(0, 1/K)` at `s = 1`, each within `1e-9`.
pub fn check_sweep_endpoints(points: &[SweepPoint], keys: usize) -> Result<()> {
    const ENDPOINT_TOL: f64 = 1e-9;
    let (first, last) = match (points.first(), points.last()) {
        (Some(f), Some(l)) if points.len() >= 2 => (f, l),
        _ => return Err(Error::Domain("sweep has fewer than two points".into())),
    };
    let expectations = [
        ("s=0 overlap", first.overlap, 1.0),
        ("s=0 optimal_p_forge", first.optimal_p_forge, 1.0),
        ("s=1 overlap", last.overlap, 0.0),
        (
            "s=1 optimal_p_forge",
            last.optimal_p_forge,
            1.0 / keys as f64,
        ),
    ];
    for (name, got, want) in expectations {
        if (got - want).abs() > ENDPOINT_TOL {
            return Err(Error::Internal(format!(
                "sweep endpoint {name} = {got}, expected {want}"
            )));
        }
    }
    Ok(())
}
