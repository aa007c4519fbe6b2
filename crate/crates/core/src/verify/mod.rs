//! Oracles and studies that check the solver against independent answers.
//!
//! - [`oracles`]: Uzawa dual iteration, grid brute force, surrogate set.
//! - [`mms`]: manufactured solutions and convergence rates.
//! - [`gate`]: Picard behaviour across the solvability threshold.
//! - [`lemma2`]: temperature stability constant under refinement.
//! - [`invariants`]: structural checks, decoupling identity, temperature
//!   integrator cross-check.

pub mod gate;
pub mod invariants;
pub mod lemma2;
pub mod mms;
pub mod oracles;

pub use oracles::{brute_force_oracle, oracle_suite, surrogate_set, tresca_reduction, uzawa_oracle, BruteForceOptions, OracleCase, OracleReport, Surrogate, TrescaReport};
pub use mms::{mms_level, run_mms, ConvergenceReport, MmsCase, MmsLevel, SeparableField};
pub use gate::{gate_study, GatePoint, GateStudy, GateStudyOptions, SweepFamily};
pub use lemma2::{lemma2_measure, lemma2_stability, Lemma2Report, Lemma2Run};
pub use invariants::{decoupling_study, structural_invariants, temperature_cross_check, DecouplingReport, InvariantReport, TemperatureCrossCheck};
