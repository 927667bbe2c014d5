//! Monte Carlo runs of the full tag -> encode -> (attack) -> decode -> verify
//! pipeline.
//!
//! Trial `i` draws from its own ChaCha8 stream (`seed`, stream `i`), so
//! results do not depend on how trials are scheduled.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{random_pure_state, unitarity_defect, ComplexMatrix};
use crate::protocol::{decode, encode, tag_message, verify, CodingSet, DensityOperator};
use crate::tolerance::Tolerances;

/// What Eve does to the state in transit.
#[derive(Debug, Clone, Default)]
pub enum Adversary {
    #[default]
    Honest,
    /// Conjugate the encoded state by this unitary.
    Unitary(ComplexMatrix),
    /// Replace the encoded state with this one.
    Forge(DensityOperator),
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationConfig {
    pub trials: usize,
    pub seed: u64,
    /// Average exact acceptance probabilities instead of sampling outcomes.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub trials: usize,
    /// Sampled acceptances (zero in exact mode).
    pub accepted: usize,
    /// Sampled rate, or the mean acceptance probability in exact mode.
    pub acceptance_rate: f64,
    /// 95% Wilson score interval for the sampled rate.
    pub interval: (f64, f64),
    /// Mean `<psi|rho'|psi>` of the recovered plaintext over accepted trials
    /// (weighted by acceptance probability in exact mode).
    pub mean_fidelity: Option<f64>,
    pub mean_accept_prob: f64,
}

struct Trial {
    accept_prob: f64,
    accepted: bool,
    fidelity: Option<f64>,
}

/// Probabilities within this distance of 0 or 1 are sampled as certain.
const CERTAINTY_SLACK: f64 = 1e-12;

fn snap(p: f64) -> f64 {
    if p >= 1.0 - CERTAINTY_SLACK {
        1.0
    } else if p <= CERTAINTY_SLACK {
        0.0
    } else {
        p
    }
}

fn run_trial(cs: &CodingSet, adversary: &Adversary, seed: u64, index: usize) -> Result<Trial> {
    let layout = cs.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);

    let key = rng.random_range(0..cs.len());
    let psi = random_pure_state(layout.m_dim(), &mut rng);
    let rho_m = DensityOperator::pure(&psi)?;
    let rho_t = DensityOperator::basis_state(layout.t_dim(), 0)?;
    let tagged = tag_message(layout, &rho_m, &rho_t)?;

    let sent = encode(cs, &tagged, key)?;
    let received = match adversary {
        Adversary::Honest => sent,
        Adversary::Unitary(f) => DensityOperator::from_trusted(f * sent.matrix() * f.adjoint()),
        Adversary::Forge(rho) => rho.clone(),
    };
    let outcome = verify(layout, &decode(cs, &received, key)?)?;
    let accept_prob = snap(outcome.accept_prob);
    let u: f64 = rng.random();
    let accepted = u < accept_prob;
    let fidelity = outcome
        .recovered_plaintext
        .map(|plain| plain.overlap(&rho_m));
    Ok(Trial {
        accept_prob,
        accepted,
        fidelity,
    })
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let phat = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (phat + z * z / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn simulate(
    cs: &CodingSet,
    adversary: &Adversary,
    config: &SimulationConfig,
) -> Result<SimulationReport> {
    if config.trials == 0 {
        return Err(Error::Domain("simulation needs at least one trial".into()));
    }
    let tol = Tolerances::default();
    let e = cs.layout().total_dim();
    match adversary {
        Adversary::Unitary(f) => {
            if f.nrows() != e || f.ncols() != e {
                return Err(Error::Dimension(format!("attack must be {e}x{e}")));
            }
            let defect = unitarity_defect(f);
            if defect > tol.unitary {
                return Err(Error::Domain(format!(
                    "attack is not unitary (defect {defect:.3e})"
                )));
            }
        }
        Adversary::Forge(rho) if rho.dim() != e => {
            return Err(Error::Dimension(format!(
                "forged state must be {e}-dimensional"
            )));
        }
        _ => {}
    }

    let trials: Vec<Trial> = (0..config.trials)
        .into_par_iter()
        .map(|i| run_trial(cs, adversary, config.seed, i))
        .collect::<Result<_>>()?;

    let n = trials.len() as f64;
    let mean_accept_prob = trials.iter().map(|t| t.accept_prob).sum::<f64>() / n;
    let accepted = trials.iter().filter(|t| t.accepted).count();

    let (acceptance_rate, interval, mean_fidelity) = if config.exact {
        let weight: f64 = trials.iter().map(|t| t.accept_prob).sum();
        let weighted: f64 = trials
            .iter()
            .filter_map(|t| t.fidelity.map(|f| f * t.accept_prob))
            .sum();
        let fid = (weight > 0.0).then(|| weighted / weight);
        (mean_accept_prob, (mean_accept_prob, mean_accept_prob), fid)
    } else {
        let fids: Vec<f64> = trials
            .iter()
            .filter(|t| t.accepted)
            .filter_map(|t| t.fidelity)
            .collect();
        let fid = (!fids.is_empty()).then(|| fids.iter().sum::<f64>() / fids.len() as f64);
        (
            accepted as f64 / n,
            wilson_interval(accepted, trials.len()),
            fid,
        )
    };

    Ok(SimulationReport {
        trials: trials.len(),
        accepted: if config.exact { 0 } else { accepted },
        acceptance_rate,
        interval,
        mean_fidelity,
        mean_accept_prob,
    })
}
