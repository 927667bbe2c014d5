//! On-disk formats: family files, state files and sweep tables.
//!
//! Family and state files are JSON with a fixed key order. Every complex entry
//! is a `[re, im]` pair and every float is written with 17 significant digits,
//! so a file read back and written again is byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;

use qauth_core::linalg::unitarity_defect;
use qauth_core::{CodingSet, ComplexMatrix, DensityOperator, SpaceLayout, SweepPoint, C64};

pub const SWEEP_HEADER: &str =
    "s,overlap,optimal_p_forge,commutant_dimension,p_unitary_block_bound";

/// Family generators known to the tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FamilyKind {
    Generic,
    Orthogonal,
    BlockRotation,
}

impl FamilyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::Generic => "generic",
            FamilyKind::Orthogonal => "orthogonal",
            FamilyKind::BlockRotation => "block-rotation",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(FamilyKind::Generic),
            "orthogonal" => Ok(FamilyKind::Orthogonal),
            "block-rotation" => Ok(FamilyKind::BlockRotation),
            other => bail!("unknown family kind {other:?}"),
        }
    }

    /// How the generator turns the base seed into random streams.
    pub fn seed_schedule(self) -> &'static str {
        match self {
            FamilyKind::Generic => {
                "U(0) = I; U(k) = Haar QR of a ChaCha8 stream seeded with seed + k"
            }
            FamilyKind::Orthogonal => "deterministic cyclic block shift; seed unused",
            FamilyKind::BlockRotation => {
                "attempt a draws every U(k) from one ChaCha8 stream seeded with \
                 seed + a * 0x9E3779B97F4A7C15; the first attempt passing validation is kept"
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMetadata {
    pub kind: FamilyKind,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub seed_schedule: String,
}

impl FamilyMetadata {
    pub fn new(kind: FamilyKind, seed: Option<u64>) -> Self {
        Self {
            kind,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed_schedule: kind.seed_schedule().to_string(),
        }
    }
}

/// A serialized coding family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyFile {
    pub layout: (usize, usize, usize),
    pub unitaries: Vec<ComplexMatrix>,
    pub metadata: FamilyMetadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayout {
    m: usize,
    t: usize,
    v: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetadata {
    kind: String,
    seed: Option<u64>,
    tool_version: String,
    seed_schedule: String,
}

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    layout: RawLayout,
    unitaries: Vec<RawMatrix>,
    metadata: RawMetadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    kind: String,
    dim: usize,
    matrix: RawMatrix,
}

/// 17 significant digits in scientific notation; valid JSON and exact on
/// re-parse.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_matrix(out: &mut String, a: &ComplexMatrix, indent: &str) {
    out.push_str("[\n");
    for i in 0..a.nrows() {
        out.push_str(indent);
        out.push_str("  [");
        for j in 0..a.ncols() {
            if j > 0 {
                out.push_str(", ");
            }
            let z = a[(i, j)];
            let _ = write!(out, "[{}, {}]", fmt_f64(z.re), fmt_f64(z.im));
        }
        out.push(']');
        if i + 1 < a.nrows() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str(indent);
    out.push(']');
}

fn matrix_from_raw(raw: &RawMatrix, dim: usize, what: &str) -> Result<ComplexMatrix> {
    ensure!(
        raw.len() == dim,
        "{what} has {} rows, expected {dim}",
        raw.len()
    );
    for (i, row) in raw.iter().enumerate() {
        ensure!(
            row.len() == dim,
            "{what} row {i} has {} entries, expected {dim}",
            row.len()
        );
    }
    let a = ComplexMatrix::from_fn(dim, dim, |i, j| C64::new(raw[i][j][0], raw[i][j][1]));
    ensure!(
        a.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        "{what} has non-finite entries"
    );
    Ok(a)
}

/// JSON string literal; the strings written here are plain ASCII, but quotes
/// and control characters are escaped anyway.
fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

impl FamilyFile {
    pub fn from_coding_set(cs: &CodingSet, metadata: FamilyMetadata) -> Self {
        let l = cs.layout();
        Self {
            layout: (l.m_dim(), l.t_dim(), l.v_dim()),
            unitaries: cs.unitaries().to_vec(),
            metadata,
        }
    }

    pub fn to_canonical_string(&self) -> String {
        let (m, t, v) = self.layout;
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"layout\": {{\"m\": {m}, \"t\": {t}, \"v\": {v}}},");
        out.push_str("  \"unitaries\": [\n");
        for (k, u) in self.unitaries.iter().enumerate() {
            out.push_str("    ");
            write_matrix(&mut out, u, "    ");
            if k + 1 < self.unitaries.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("  ],\n");
        let md = &self.metadata;
        let seed = md.seed.map_or("null".to_string(), |s| s.to_string());
        let _ = writeln!(
            out,
            "  \"metadata\": {{\"kind\": {}, \"seed\": {seed}, \"tool_version\": {}, \"seed_schedule\": {}}}",
            json_string(md.kind.as_str()),
            json_string(&md.tool_version),
            json_string(&md.seed_schedule)
        );
        out.push_str("}\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawFamily = serde_json::from_str(text).context("malformed family file")?;
        let (m, t, v) = (raw.layout.m, raw.layout.t, raw.layout.v);
        let e = m.checked_mul(t).context("layout dimension overflows")?;
        ensure!(!raw.unitaries.is_empty(), "family file lists no unitaries");
        let unitaries = raw
            .unitaries
            .iter()
            .enumerate()
            .map(|(k, u)| matrix_from_raw(u, e, &format!("U({k})")))
            .collect::<Result<_>>()?;
        let metadata = FamilyMetadata {
            kind: FamilyKind::parse(&raw.metadata.kind)?,
            seed: raw.metadata.seed,
            tool_version: raw.metadata.tool_version,
            seed_schedule: raw.metadata.seed_schedule,
        };
        Ok(Self {
            layout: (m, t, v),
            unitaries,
            metadata,
        })
    }

    /// Checks the layout against `max_dim` and the family against the
    /// coding-set invariants.
    pub fn to_coding_set(&self, max_dim: usize, unitary_tol: f64) -> Result<CodingSet> {
        let (m, t, v) = self.layout;
        let layout = SpaceLayout::with_max_dim(m, t, v, max_dim)?;
        Ok(CodingSet::with_tolerance(
            layout,
            self.unitaries.clone(),
            unitary_tol,
        )?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_canonical_string())
            .with_context(|| format!("cannot write {}", path.display()))
    }
}

/// A single operator on disk: an attack unitary or a density operator.
#[derive(Debug, Clone, PartialEq)]
pub enum StateFile {
    Unitary(ComplexMatrix),
    Density(DensityOperator),
}

impl StateFile {
    fn kind(&self) -> &'static str {
        match self {
            StateFile::Unitary(_) => "unitary",
            StateFile::Density(_) => "density",
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        match self {
            StateFile::Unitary(u) => u,
            StateFile::Density(rho) => rho.matrix(),
        }
    }

    pub fn to_canonical_string(&self) -> String {
        let a = self.matrix();
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"kind\": {},", json_string(self.kind()));
        let _ = writeln!(out, "  \"dim\": {},", a.nrows());
        out.push_str("  \"matrix\": ");
        write_matrix(&mut out, a, "  ");
        out.push_str("\n}\n");
        out
    }

    pub fn parse(text: &str, unitary_tol: f64) -> Result<Self> {
        let raw: RawState = serde_json::from_str(text).context("malformed state file")?;
        let a = matrix_from_raw(&raw.matrix, raw.dim, "matrix")?;
        match raw.kind.as_str() {
            "unitary" => {
                let defect = unitarity_defect(&a);
                ensure!(
                    defect <= unitary_tol,
                    "matrix is not unitary (defect {defect:.3e})"
                );
                Ok(StateFile::Unitary(a))
            }
            "density" => Ok(StateFile::Density(DensityOperator::new(a)?)),
            other => bail!("unknown state kind {other:?}"),
        }
    }

    pub fn read(path: &Path, unitary_tol: f64) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text, unitary_tol).with_context(|| format!("in {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_canonical_string())
            .with_context(|| format!("cannot write {}", path.display()))
    }
}

/// Shortest round-trip decimal, switching to exponent form for tiny values.
fn csv_float(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-6 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// Comma-separated sweep table with [`SWEEP_HEADER`]; an undefined block bound
/// is an empty field.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in points {
        let bound = p.p_unitary_block_bound.map_or(String::new(), csv_float);
        let _ = writeln!(
            out,
            "{},{},{},{},{bound}",
            csv_float(p.s),
            csv_float(p.overlap),
            csv_float(p.optimal_p_forge),
            p.commutant_dimension
        );
    }
    out
}
