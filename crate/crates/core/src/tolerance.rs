/// Default cap on the total Hilbert-space dimension handled by dense routines.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Shared numerical thresholds.
///
/// Rank and nullspace decisions are relative to the largest singular value of
/// the matrix being inspected. Commutator residuals are absolute Frobenius norms
/// on operators of unit scale (projectors and unitaries).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Singular values at or below `rank_rel * sigma_max` count as zero.
    pub rank_rel: f64,
    /// A matrix whose largest singular value is at or below this is treated as zero.
    pub zero_abs: f64,
    /// Allowed deviation for Hermiticity checks (relative to the Frobenius norm).
    pub hermitian: f64,
    /// Allowed `||U^dagger U - I||_F`.
    pub unitary: f64,
    /// Allowed trace / positivity / support slack on density operators.
    pub density: f64,
    /// Allowed commutator residual for commutant membership.
    pub commutator: f64,
    /// Minimum relative eigenvalue gap for the distinct-eigenvalue conditions.
    pub eigen_gap: f64,
    /// Overlaps above `1 - overlap` count as a shared eigenvector; subspace
    /// cross-Gram norms below it count as orthogonal.
    pub overlap: f64,
    /// Upper bound on any total dimension E.
    pub max_dim: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_rel: 1e-10,
            zero_abs: 1e-13,
            hermitian: 1e-10,
            unitary: 1e-10,
            density: 1e-10,
            commutator: 1e-8,
            eigen_gap: 1e-8,
            overlap: 1e-8,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

impl Tolerances {
    pub fn with_rank_rel(mut self, rank_rel: f64) -> Self {
        self.rank_rel = rank_rel;
        self
    }

    pub fn with_max_dim(mut self, max_dim: usize) -> Self {
        self.max_dim = max_dim;
        self
    }
}
