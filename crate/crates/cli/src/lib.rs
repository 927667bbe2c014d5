//! Command-line front end for the qauth numerical core.
//!
//! Exit codes: 0 success or pass, 1 analysed-and-insecure or an aborted
//! invariant, 2 usage or input error.

pub mod files;

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qauth_core::family::{
    check_sweep_endpoints, generate_block_rotation_family, generate_generic_family,
    generate_orthogonal_family, sweep_overlap, validate_equal_dims, validate_forgery,
    validate_unequal_dims,
};
use qauth_core::forgery::optimal_forgery;
use qauth_core::simulation::simulate;
use qauth_core::tolerance::DEFAULT_MAX_DIM;
use qauth_core::unitary_attack::{deterministic_attack_commutant, p_unitary};
use qauth_core::{
    Adversary, CodingSet, ConditionReport, DensityOperator, SimulationConfig, SpaceLayout,
    Tolerances,
};

use files::{sweep_csv, FamilyFile, FamilyKind, FamilyMetadata, StateFile};

pub const SEED_ENV: &str = "QAUTH_SEED";
pub const MAX_DIM_ENV: &str = "QAUTH_MAX_DIM";

#[derive(Debug, Parser)]
#[command(
    name = "qauth",
    version,
    about = "Unitary coding sets for quantum message authentication"
)]
pub struct Cli {
    /// Relative singular-value threshold for every rank, kernel and commutant decision.
    #[arg(long, global = true, value_name = "TOL")]
    pub tol: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a coding family and write it as a family file.
    Generate(GenerateArgs),
    /// Check a family against the security conditions.
    Validate(ValidateArgs),
    /// Run the unitary or forgery attack analysis on a family.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Monte Carlo run of the authentication pipeline.
    Simulate(SimulateArgs),
    /// Interpolate from coincident to orthogonal code spaces and tabulate.
    Sweep(SweepArgs),
}

fn parse_layout(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [m, t, v] => {
            let num = |x: &str| x.parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
            Ok((num(m)?, num(t)?, num(v)?))
        }
        _ => Err(format!("expected m,t,v, got {s:?}")),
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Message, tag and valid-tag dimensions.
    #[arg(long, value_name = "m,t,v", value_parser = parse_layout)]
    pub layout: (usize, usize, usize),
    #[arg(long, value_enum)]
    pub kind: FamilyKind,
    /// Family size (block-rotation always uses q + 1).
    #[arg(long = "k", value_name = "K")]
    pub keys: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ValidateMode {
    Equal,
    Unequal,
    Forgery,
    All,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub family: PathBuf,
    #[arg(long, value_enum, default_value_t = ValidateMode::All)]
    pub mode: ValidateMode,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum AttackCommand {
    /// Commutant of the transformed projectors and the extracted attack.
    Unitary(UnitaryAttackArgs),
    /// Optimal forged state.
    Forge(ForgeAttackArgs),
}

#[derive(Debug, Args)]
pub struct UnitaryAttackArgs {
    pub family: PathBuf,
    /// Density operator on the full space; defaults to the maximally mixed code state.
    #[arg(long, value_name = "STATE_PATH")]
    pub rho: Option<PathBuf>,
    /// Where to write the extracted attack [default: FAMILY.attack.json].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ForgeAttackArgs {
    pub family: PathBuf,
    /// Where to write the forged state [default: FAMILY.forged.json].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub family: PathBuf,
    #[arg(long)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Unitary state file applied to every encoded state.
    #[arg(long, value_name = "F_PATH", conflicts_with = "forge")]
    pub attack: Option<PathBuf>,
    /// Density state file substituted for every encoded state.
    #[arg(long, value_name = "RHO_PATH")]
    pub forge: Option<PathBuf>,
    /// Average exact acceptance probabilities instead of sampling outcomes.
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_name = "m,t,v", value_parser = parse_layout)]
    pub layout: (usize, usize, usize),
    #[arg(long = "k", value_name = "K")]
    pub keys: usize,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Insecure,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Insecure => 1,
        }
    }
}

/// A computed result that violates an invariant the command promises.
#[derive(Debug)]
pub struct InvariantAbort(pub String);

impl fmt::Display for InvariantAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invariant violated: {}", self.0)
    }
}

impl std::error::Error for InvariantAbort {}

/// Exit code for a failed command: numerical breakdowns and invariant aborts
/// give 1, everything attributable to the input gives 2.
pub fn failure_code(err: &anyhow::Error) -> u8 {
    use qauth_core::Error as E;
    if err.downcast_ref::<InvariantAbort>().is_some() {
        return 1;
    }
    match err.downcast_ref::<E>() {
        Some(
            E::NonConvergence { .. }
            | E::DegenerateBranch { .. }
            | E::SweepBranch { .. }
            | E::Generation { .. }
            | E::Internal(_),
        ) => 1,
        _ => 2,
    }
}

fn env_override<T: std::str::FromStr>(name: &str) -> Result<Option<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    match std::env::var(name) {
        Ok(raw) => Ok(Some(
            raw.trim()
                .parse()
                .with_context(|| format!("{name}={raw:?} is not valid"))?,
        )),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("{name}: {e}"),
    }
}

fn resolve_seed(flag: u64) -> Result<u64> {
    Ok(env_override(SEED_ENV)?.unwrap_or(flag))
}

pub fn tolerances(tol: Option<f64>) -> Result<Tolerances> {
    let max_dim = env_override::<usize>(MAX_DIM_ENV)?.unwrap_or(DEFAULT_MAX_DIM);
    if max_dim == 0 {
        bail!("{MAX_DIM_ENV} must be positive");
    }
    let mut t = Tolerances::default().with_max_dim(max_dim);
    if let Some(rel) = tol {
        if !(rel.is_finite() && rel > 0.0 && rel < 1.0) {
            bail!("--tol must lie in (0, 1), got {rel}");
        }
        t = t.with_rank_rel(rel);
    }
    Ok(t)
}

pub fn run(cli: Cli) -> Result<Status> {
    let tol = tolerances(cli.tol)?;
    match cli.command {
        Command::Generate(a) => cmd_generate(&a, &tol),
        Command::Validate(a) => cmd_validate(&a, &tol),
        Command::Attack(AttackCommand::Unitary(a)) => cmd_attack_unitary(&a, &tol),
        Command::Attack(AttackCommand::Forge(a)) => cmd_attack_forge(&a, &tol),
        Command::Simulate(a) => cmd_simulate(&a, &tol),
        Command::Sweep(a) => cmd_sweep(&a, &tol),
    }
}

fn layout_from(dims: (usize, usize, usize), tol: &Tolerances) -> Result<SpaceLayout> {
    Ok(SpaceLayout::with_max_dim(
        dims.0,
        dims.1,
        dims.2,
        tol.max_dim,
    )?)
}

pub fn load_family(path: &Path, tol: &Tolerances) -> Result<CodingSet> {
    FamilyFile::read(path)?
        .to_coding_set(tol.max_dim, tol.unitary)
        .with_context(|| format!("in {}", path.display()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

pub fn cmd_generate(args: &GenerateArgs, tol: &Tolerances) -> Result<Status> {
    let layout = layout_from(args.layout, tol)?;
    let seed = resolve_seed(args.seed)?;
    let need_keys = || args.keys.context("--k is required for this kind");
    let (cs, seed) = match args.kind {
        FamilyKind::Generic => (
            generate_generic_family(&layout, need_keys()?, seed)?,
            Some(seed),
        ),
        FamilyKind::Orthogonal => (generate_orthogonal_family(&layout, need_keys()?)?, None),
        FamilyKind::BlockRotation => (
            generate_block_rotation_family(&layout, seed, tol)?,
            Some(seed),
        ),
    };
    FamilyFile::from_coding_set(&cs, FamilyMetadata::new(args.kind, seed)).write(&args.out)?;
    println!("layout {layout}");
    println!(
        "wrote {} family with K={} to {}",
        args.kind.as_str(),
        cs.len(),
        args.out.display()
    );
    Ok(Status::Pass)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Secure,
    Insecure,
    Inapplicable,
}

impl Verdict {
    fn token(self) -> &'static str {
        match self {
            Verdict::Secure => "SECURE",
            Verdict::Insecure => "INSECURE",
            Verdict::Inapplicable => "INAPPLICABLE",
        }
    }
}

struct ModeResult {
    mode: &'static str,
    verdict: Verdict,
    checks: Vec<(String, bool, String)>,
    note: Option<String>,
}

impl ModeResult {
    fn inapplicable(mode: &'static str, note: String) -> Self {
        Self {
            mode,
            verdict: Verdict::Inapplicable,
            checks: Vec::new(),
            note: Some(note),
        }
    }

    fn from_report(mode: &'static str, report: &ConditionReport) -> Self {
        Self {
            mode,
            verdict: if report.passed() {
                Verdict::Secure
            } else {
                Verdict::Insecure
            },
            checks: report
                .checks
                .iter()
                .map(|c| (c.name.clone(), c.passed, c.witness.to_string()))
                .collect(),
            note: None,
        }
    }
}

/// Validators reject families they do not apply to with a domain-type error;
/// those become INAPPLICABLE rather than failures.
fn conditions(
    mode: &'static str,
    result: qauth_core::Result<ConditionReport>,
) -> Result<ModeResult> {
    use qauth_core::Error as E;
    match result {
        Ok(report) => Ok(ModeResult::from_report(mode, &report)),
        Err(e @ (E::Domain(_) | E::InsufficientFamily(_) | E::Layout(_))) => {
            Ok(ModeResult::inapplicable(mode, e.to_string()))
        }
        Err(e) => Err(e.into()),
    }
}

fn validate_mode(mode: ValidateMode, cs: &CodingSet, tol: &Tolerances) -> Result<Vec<ModeResult>> {
    let layout = cs.layout();
    let equal = || {
        if layout.code_dim() != layout.complement_dim() {
            Ok(ModeResult::inapplicable(
                "equal",
                format!("C != D ({layout})"),
            ))
        } else {
            conditions("equal", validate_equal_dims(cs, tol))
        }
    };
    let unequal = || conditions("unequal", validate_unequal_dims(cs, tol));
    let forgery = || {
        if cs.len() < 2 {
            Ok(ModeResult::inapplicable(
                "forgery",
                "forgery conditions need K >= 2".into(),
            ))
        } else {
            conditions("forgery", validate_forgery(cs, tol))
        }
    };
    let unitary = || -> Result<ModeResult> {
        let report = deterministic_attack_commutant(cs, tol)?;
        let mut checks = vec![(
            "commutant of P_i(k) is scalar".to_string(),
            report.is_secure,
            format!("dimension {}", report.dimension),
        )];
        if let Some(h) = report.harmful {
            checks.push((
                "extracted attack is harmless".into(),
                !h,
                format!("harmful: {h}"),
            ));
        }
        Ok(ModeResult {
            mode: "unitary",
            verdict: if report.is_secure {
                Verdict::Secure
            } else {
                Verdict::Insecure
            },
            checks,
            note: None,
        })
    };
    Ok(match mode {
        ValidateMode::Equal => vec![equal()?],
        ValidateMode::Unequal => vec![unequal()?],
        ValidateMode::Forgery => vec![forgery()?],
        ValidateMode::All => vec![equal()?, unequal()?, forgery()?, unitary()?],
    })
}

pub fn cmd_validate(args: &ValidateArgs, tol: &Tolerances) -> Result<Status> {
    let cs = load_family(&args.family, tol)?;
    let results = validate_mode(args.mode, &cs, tol)?;
    // a single requested mode must apply and pass; "all" fails on any insecure mode
    let passed = match args.mode {
        ValidateMode::All => results.iter().all(|r| r.verdict != Verdict::Insecure),
        _ => results.iter().all(|r| r.verdict == Verdict::Secure),
    };
    if args.json {
        let modes: Vec<_> = results
            .iter()
            .map(|r| {
                json!({
                    "mode": r.mode,
                    "status": r.verdict.token(),
                    "checks": r.checks.iter().map(|(name, ok, witness)| json!({
                        "name": name, "passed": ok, "witness": witness,
                    })).collect::<Vec<_>>(),
                    "note": r.note,
                })
            })
            .collect();
        println!("{}", json!({ "passed": passed, "modes": modes }));
    } else {
        println!(
            "family {} ({}, K={})",
            args.family.display(),
            cs.layout(),
            cs.len()
        );
        for r in &results {
            for (name, ok, witness) in &r.checks {
                println!("  [{}] {name}: {witness}", if *ok { "ok" } else { "FAIL" });
            }
            if let Some(note) = &r.note {
                println!("  {note}");
            }
            println!("{} {}", r.mode, r.verdict.token());
        }
    }
    Ok(if passed {
        Status::Pass
    } else {
        Status::Insecure
    })
}

pub fn cmd_attack_unitary(args: &UnitaryAttackArgs, tol: &Tolerances) -> Result<Status> {
    let cs = load_family(&args.family, tol)?;
    let rho = match &args.rho {
        Some(path) => match StateFile::read(path, tol.unitary)? {
            StateFile::Density(rho) => rho,
            StateFile::Unitary(_) => {
                bail!("{} holds a unitary, expected a density", path.display())
            }
        },
        None => DensityOperator::maximally_mixed_code(cs.layout()),
    };
    if rho.dim() != cs.layout().total_dim() {
        bail!("rho must be {0}x{0}", cs.layout().total_dim());
    }
    let report = deterministic_attack_commutant(&cs, tol)?;
    let mut written = None;
    let mut success = None;
    if let Some(f) = &report.extracted_attack {
        success = Some(p_unitary(&cs, f, &rho)?);
        let path = args
            .out
            .clone()
            .unwrap_or_else(|| sibling(&args.family, ".attack.json"));
        StateFile::Unitary(f.clone()).write(&path)?;
        written = Some(path);
    }
    if args.json {
        println!(
            "{}",
            json!({
                "commutant_dimension": report.dimension,
                "secure": report.is_secure,
                "attack_extracted": report.extracted_attack.is_some(),
                "harmful": report.harmful,
                "p_unitary": success,
                "attack_path": written.as_ref().map(|p| p.display().to_string()),
            })
        );
    } else if report.extracted_attack.is_none() {
        println!(
            "commutant dimension {}, no deterministic attack",
            report.dimension
        );
    } else {
        println!(
            "commutant dimension {}, non-scalar attack extracted",
            report.dimension
        );
        if let Some(h) = report.harmful {
            println!("harmful: {}", if h { "yes" } else { "no" });
        }
        if let Some(p) = success {
            let which = if args.rho.is_some() {
                "supplied rho"
            } else {
                "maximally mixed code state"
            };
            println!("P^u_e = {p:.12} ({which})");
        }
        if let Some(path) = &written {
            println!("wrote attack unitary to {}", path.display());
        }
    }
    Ok(if report.is_secure {
        Status::Pass
    } else {
        Status::Insecure
    })
}

pub fn cmd_attack_forge(args: &ForgeAttackArgs, tol: &Tolerances) -> Result<Status> {
    let cs = load_family(&args.family, tol)?;
    let report = optimal_forgery(&cs, tol)?;
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| sibling(&args.family, ".forged.json"));
    StateFile::Density(report.optimal_state.clone()).write(&path)?;
    if args.json {
        println!(
            "{}",
            json!({
                "optimal_p_forge": report.optimal_p_forge,
                "keys": cs.len(),
                "perfect_forgery": report.perfect_forgery_exists,
                "kernel_dimension": report.kernel_basis.ncols(),
                "top_multiplicity": report.top_multiplicity,
                "state_path": path.display().to_string(),
            })
        );
    } else {
        println!(
            "optimal P^f_e = {:.12} (K={}, 1/K = {:.12})",
            report.optimal_p_forge,
            cs.len(),
            1.0 / cs.len() as f64
        );
        println!(
            "perfect forgery: {} (kernel dimension {})",
            if report.perfect_forgery_exists {
                "yes"
            } else {
                "no"
            },
            report.kernel_basis.ncols()
        );
        println!("wrote forged state to {}", path.display());
    }
    Ok(if report.perfect_forgery_exists {
        Status::Insecure
    } else {
        Status::Pass
    })
}

pub fn cmd_simulate(args: &SimulateArgs, tol: &Tolerances) -> Result<Status> {
    let cs = load_family(&args.family, tol)?;
    let adversary = match (&args.attack, &args.forge) {
        (Some(path), _) => match StateFile::read(path, tol.unitary)? {
            StateFile::Unitary(f) => Adversary::Unitary(f),
            StateFile::Density(_) => {
                bail!("{} holds a density, expected a unitary", path.display())
            }
        },
        (None, Some(path)) => match StateFile::read(path, tol.unitary)? {
            StateFile::Density(rho) => Adversary::Forge(rho),
            StateFile::Unitary(_) => {
                bail!("{} holds a unitary, expected a density", path.display())
            }
        },
        (None, None) => Adversary::Honest,
    };
    let config = SimulationConfig {
        trials: args.trials,
        seed: resolve_seed(args.seed)?,
        exact: args.exact,
    };
    let report = simulate(&cs, &adversary, &config)?;
    if args.json {
        println!(
            "{}",
            json!({
                "trials": report.trials,
                "accepted": report.accepted,
                "acceptance_rate": report.acceptance_rate,
                "interval": [report.interval.0, report.interval.1],
                "mean_fidelity": report.mean_fidelity,
                "mean_accept_prob": report.mean_accept_prob,
                "exact": args.exact,
                "seed": config.seed,
            })
        );
    } else {
        if args.exact {
            println!("trials {} (exact probabilities)", report.trials);
            println!("acceptance probability {:.6}", report.acceptance_rate);
        } else {
            println!("trials {}, accepted {}", report.trials, report.accepted);
            println!(
                "acceptance rate {:.6} (95% interval [{:.6}, {:.6}])",
                report.acceptance_rate, report.interval.0, report.interval.1
            );
        }
        match report.mean_fidelity {
            Some(f) => println!("mean plaintext fidelity on acceptance {f:.6}"),
            None => println!("mean plaintext fidelity on acceptance: no accepted trials"),
        }
    }
    Ok(Status::Pass)
}

pub fn cmd_sweep(args: &SweepArgs, tol: &Tolerances) -> Result<Status> {
    let layout = layout_from(args.layout, tol)?;
    let seed = resolve_seed(args.seed)?;
    let points = sweep_overlap(&layout, args.keys, args.steps, seed, tol)?;
    check_sweep_endpoints(&points, args.keys).map_err(|e| InvariantAbort(e.to_string()))?;
    if points.len() != args.steps || points.windows(2).any(|w| w[0].s >= w[1].s) {
        return Err(InvariantAbort("sweep rows are not one per step in ascending s".into()).into());
    }
    std::fs::write(&args.out, sweep_csv(&points))
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!(
        "wrote {} sweep rows for {layout} K={} to {}",
        points.len(),
        args.keys,
        args.out.display()
    );
    Ok(Status::Pass)
}
