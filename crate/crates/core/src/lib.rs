//! Numerical laboratory for quantum-message authentication with unitary
//! coding sets.
//!
//! A message state is tagged with a public valid tag, encoded with a
//! key-selected unitary `U(k)`, and accepted by the receiver when the decoded
//! state lies in the code space. The crate builds that pipeline
//! ([`protocol`]), the two adversaries against it ([`unitary_attack`],
//! [`forgery`]), generators and security-condition validators for coding
//! families ([`family`]), and a Monte Carlo driver ([`simulation`]).

pub mod error;
pub mod family;
pub mod forgery;
pub mod linalg;
pub mod protocol;
pub mod simulation;
pub mod tolerance;
pub mod unitary_attack;

pub use error::{Error, Result};
pub use family::{ConditionCheck, ConditionReport, SweepPoint, Witness};
pub use forgery::ForgeryReport;
pub use linalg::{ComplexMatrix, ComplexVector, C64};
pub use protocol::{BlockDecomposition, CodingSet, DensityOperator, SpaceLayout, Verification};
pub use simulation::{Adversary, SimulationConfig, SimulationReport};
pub use tolerance::Tolerances;
pub use unitary_attack::{CommutantReport, GhOperators, HRankCase, K2Analysis};
