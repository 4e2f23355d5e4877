//! The repeated-game player: estimate the value, play one round, let the
//! referee measure, then repair the estimate before the next round.

use super::model::GameModel;
use super::repair::{repair, RepairOutcome};
use super::valest::{pick, SpectralValEst, ValEstParams};
use super::RewindError;
use crate::quantum_sim::state::C;
use crate::quantum_sim::QsimError;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Default for the unspecified constant in `δ = η₀² / (c n²)`.
pub const DEFAULT_C: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatedParams {
    pub rounds: usize,
    pub eta0: f64,
    pub c: f64,
    /// `η₀ / (2n + 2)`.
    pub epsilon: f64,
    /// `η₀² / (c n²)`.
    pub delta: f64,
    /// Repair budget `⌈1/√δ⌉`.
    pub budget: u64,
    pub valest: ValEstParams,
}

impl RepeatedParams {
    pub fn new(rounds: usize, eta0: f64, c: f64) -> Result<Self, RewindError> {
        if rounds == 0 || !(eta0 > 0.0 && eta0 <= 1.0) || !(c >= 1.0) {
            return Err(RewindError::Invalid(format!("n = {rounds}, eta0 = {eta0}, c = {c}")));
        }
        let n = rounds as f64;
        let epsilon = eta0 / (2.0 * n + 2.0);
        let delta = eta0 * eta0 / (c * n * n);
        let budget = (1.0 / delta.sqrt()).ceil() as u64;
        Ok(RepeatedParams { rounds, eta0, c, epsilon, delta, budget, valest: ValEstParams::new(epsilon, delta)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub challenge: usize,
    pub estimate: f64,
    pub win: bool,
    /// Accepting answer measured by a recording referee.
    pub answer: Option<usize>,
    pub repair: RepairOutcome,
    /// Exact value of the state entering the round.
    pub value_before: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayOutcome {
    pub rounds: Vec<Round>,
}

impl PlayOutcome {
    pub fn wins(&self) -> usize {
        self.rounds.iter().filter(|r| r.win).count()
    }

    pub fn bits(&self) -> Vec<bool> {
        self.rounds.iter().map(|r| r.win).collect()
    }
}

fn project<R: Rng + ?Sized>(pi: &DMatrix<C>, x: &DVector<C>, rng: &mut R) -> Result<(bool, DVector<C>), RewindError> {
    let y = pi * x;
    let p1 = y.norm_squared().clamp(0.0, 1.0);
    let bit = rng.random::<f64>() < p1;
    let branch = if bit { y } else { x - y };
    let n = branch.norm();
    if n < 1e-12 {
        return Err(RewindError::Qsim(QsimError::Degenerate(n * n)));
    }
    Ok((bit, branch / C::new(n, 0.0)))
}

/// Referee measurement for challenge `r`: the win bit, then (if the model
/// records answers and the round was won) the accepting answer. Returns
/// the projector of the observed outcome for the repair step.
fn referee<R: Rng + ?Sized>(
    model: &GameModel,
    r: usize,
    x: &DVector<C>,
    rng: &mut R,
) -> Result<(bool, Option<usize>, DMatrix<C>, DVector<C>), RewindError> {
    let win = &model.win[r];
    let (bit, y) = project(win, x, rng)?;
    if !bit {
        let k = model.dim();
        return Ok((false, None, DMatrix::identity(k, k) - win, y));
    }
    let Some(responses) = &model.responses else {
        return Ok((true, None, win.clone(), y));
    };
    let ws: Vec<f64> = responses[r].iter().map(|(_, p)| (p * &y).norm_squared()).collect();
    let i = pick(&ws, rng).ok_or(RewindError::Qsim(QsimError::Degenerate(0.0)))?;
    let (z, p) = &responses[r][i];
    let y = p * &y;
    let n = y.norm();
    Ok((true, Some(*z), p.clone(), y / C::new(n, 0.0)))
}

/// Plays `challenges.len()` rounds from model state `x0`.
pub fn repeated_play<R: Rng + ?Sized>(
    model: &GameModel,
    x0: &DVector<C>,
    params: &RepeatedParams,
    challenges: &[usize],
    rng: &mut R,
) -> Result<(PlayOutcome, DVector<C>), RewindError> {
    let m = SpectralValEst::new(model, params.valest);
    let mut x = x0.clone();
    let mut rounds = Vec::with_capacity(challenges.len());
    for &r in challenges {
        let value_before = model.value(&x);
        let (rec, x1) = m.run(&x, rng)?;
        let (win, answer, pi, x2) = referee(model, r, &x1, rng)?;
        let p = rec.estimate;
        let (rep, x3) = repair(&m, &pi, &x2, p - params.epsilon, p + params.epsilon, params.budget, rng)?;
        rounds.push(Round { challenge: r, estimate: p, win, answer, repair: rep, value_before });
        x = x3;
    }
    Ok((PlayOutcome { rounds }, x))
}

/// Measures the win projectors of `challenges` in sequence with no repair.
pub fn naive_play<R: Rng + ?Sized>(
    model: &GameModel,
    x0: &DVector<C>,
    challenges: &[usize],
    rng: &mut R,
) -> Result<Vec<bool>, RewindError> {
    let mut x = x0.clone();
    let mut bits = Vec::with_capacity(challenges.len());
    for &r in challenges {
        let (b, y) = project(&model.win[r], &x, rng)?;
        bits.push(b);
        x = y;
    }
    Ok(bits)
}
