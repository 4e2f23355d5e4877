//! Forking: run the repeated-game player against a referee that records
//! every accepted `(r, z)` for a fixed challenge list.

use super::model::GameModel;
use super::repeated::{repeated_play, PlayOutcome, RepeatedParams};
use super::RewindError;
use crate::quantum_sim::state::C;
use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForkOutcome {
    /// Accepted transcripts `(s, z)`, first answer kept per challenge.
    pub transcripts: Vec<(usize, usize)>,
    pub play: PlayOutcome,
}

/// Runs the player on `challenges` and collects `W`. The model must record
/// answers.
pub fn fork<R: Rng + ?Sized>(
    model: &GameModel,
    x0: &DVector<C>,
    challenges: &[usize],
    eta0: f64,
    c: f64,
    rng: &mut R,
) -> Result<ForkOutcome, RewindError> {
    if model.responses.is_none() {
        return Err(RewindError::Invalid("fork needs a model that records answers".into()));
    }
    let params = RepeatedParams::new(challenges.len(), eta0, c)?;
    let (play, _) = repeated_play(model, x0, &params, challenges, rng)?;
    let mut transcripts: Vec<(usize, usize)> = Vec::new();
    for round in &play.rounds {
        if let (true, Some(z)) = (round.win, round.answer) {
            if !transcripts.iter().any(|&(s, _)| s == round.challenge) {
                transcripts.push((round.challenge, z));
            }
        }
    }
    let out = ForkOutcome { transcripts, play };
    check_fork(model, challenges, &out)?;
    Ok(out)
}

/// Every transcript accepts, challenges are distinct, and each comes from
/// the challenge list.
pub fn check_fork(model: &GameModel, challenges: &[usize], out: &ForkOutcome) -> Result<(), RewindError> {
    for (i, &(s, z)) in out.transcripts.iter().enumerate() {
        if !model.game.accepts(s, z) {
            return Err(RewindError::Invalid(format!("transcript ({s}, {z}) rejects")));
        }
        if out.transcripts[..i].iter().any(|&(t, _)| t == s) {
            return Err(RewindError::Invalid(format!("challenge {s} repeated")));
        }
        if !challenges.contains(&s) {
            return Err(RewindError::Invalid(format!("challenge {s} not in the list")));
        }
    }
    Ok(())
}
