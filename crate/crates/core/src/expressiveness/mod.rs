//! Isomorphism-test oracles, random-walk diagnostics, and the verdict
//! procedures behind the built-in theorem checks.

mod cycles;
mod markov;
pub mod theorems;
mod verdicts;
mod wl;

use thiserror::Error;

pub use cycles::{chordless_cycles, chordless_profile};
pub use markov::{
    rrwp, rrwp_convergence_report, stationary, transition_matrix, ConvergenceReport, RrwpEncoding,
    SquareMatrix, StationaryDistribution,
};
pub use verdicts::{deletion_profiles, distinguish_by_biconnectivity, distinguish_by_cycles, Verdict};
pub use wl::{
    augmented_wl1_distinguishes, wl1_distinguishes, wl1_refine, wl1_with_clique_augmentation,
    wl3_distinguishes, ColorRefinement, WL3_MAX_NODES,
};

#[derive(Debug, Error, PartialEq)]
pub enum ExpressivenessError {
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("capability exceeded: {0}")]
    Capability(String),
    #[error("node {0} has degree zero")]
    DegreeZero(usize),
    #[error("precondition failed: {0}")]
    Precondition(String),
}
