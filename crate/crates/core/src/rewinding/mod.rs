//! Quantum rewinding: value estimation, state repair, the repeated-game
//! player, forking and special-sound extraction, on top of
//! [`crate::quantum_sim`].

pub mod fork;
pub mod game;
pub mod model;
pub mod repair;
pub mod repeated;
pub mod sigma;
pub mod valest;

pub use fork::{check_fork, fork, ForkOutcome};
pub use game::{exact_value, exact_value_density, Game, Strategy};
pub use model::GameModel;
pub use repair::{repair, repair_expt, DilatedMeasurement, ProjectiveMeasurement, RepairExptRecord, RepairOutcome};
pub use repeated::{naive_play, repeated_play, PlayOutcome, RepeatedParams, Round};
pub use sigma::{special_sound_extract, ExtractOutcome, SigmaInstance, SigmaProver};
pub use valest::{SpectralValEst, ValEstParams, ValEstRecord, ValEstWorkspace};

use crate::quantum_sim::QsimError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewindError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Qsim(#[from] QsimError),
}
