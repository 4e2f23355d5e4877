//! Single-round games, unitary strategies and the exact value oracle.

use crate::quantum_sim::ops::{StructuredProjector, UnitaryOp};
use crate::quantum_sim::state::{random_gaussian_vector, StateVector, C};
use crate::quantum_sim::DensityOp;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::sync::Arc;

use super::RewindError;

/// Question set `0..questions`, answer set `0..answers` and a total win
/// predicate stored as a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    pub questions: usize,
    pub answers: usize,
    table: Vec<bool>,
}

impl Game {
    pub const MAX_QUESTIONS: usize = 1 << 10;

    pub fn new(questions: usize, answers: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self, RewindError> {
        if questions == 0 || answers == 0 || questions > Self::MAX_QUESTIONS {
            return Err(RewindError::Invalid(format!("game of size {questions} x {answers}")));
        }
        let table = (0..questions).flat_map(|r| (0..answers).map(move |z| (r, z))).map(|(r, z)| f(r, z)).collect();
        Ok(Game { questions, answers, table })
    }

    pub fn accepts(&self, r: usize, z: usize) -> bool {
        self.table[r * self.answers + z]
    }

    pub fn accepting(&self, r: usize) -> Vec<usize> {
        (0..self.answers).filter(|&z| self.accepts(r, z)).collect()
    }

    /// Fraction of accepting `(r, z)` pairs.
    pub fn acceptance_fraction(&self) -> f64 {
        self.table.iter().filter(|&&b| b).count() as f64 / self.table.len() as f64
    }
}

/// Unitaries `U_{S,r}` on `(Z, I)`; `Z` is the most significant factor, so
/// basis index `z * internal_dim + i`.
#[derive(Debug, Clone)]
pub struct Strategy {
    pub answer_dim: usize,
    pub internal_dim: usize,
    pub unitaries: Vec<Arc<UnitaryOp>>,
}

impl Strategy {
    pub fn new(answer_dim: usize, internal_dim: usize, unitaries: Vec<UnitaryOp>) -> Result<Self, RewindError> {
        let d = answer_dim * internal_dim;
        if let Some(u) = unitaries.iter().find(|u| u.dim() != d) {
            return Err(RewindError::Invalid(format!("unitary of dimension {} on a {d}-dimensional space", u.dim())));
        }
        Ok(Strategy { answer_dim, internal_dim, unitaries: unitaries.into_iter().map(Arc::new).collect() })
    }

    pub fn dim(&self) -> usize {
        self.answer_dim * self.internal_dim
    }

    /// Projector onto basis states whose `Z` digit satisfies `keep`.
    pub fn answer_mask(&self, keep: impl Fn(usize) -> bool) -> StructuredProjector {
        let ni = self.internal_dim;
        StructuredProjector::predicate(self.dim(), |x| keep(x / ni))
    }

    /// `Π_{f,r} = U_r† (Σ_{f(r,z)=1} |z⟩⟨z| ⊗ I) U_r`.
    pub fn win_projector(&self, game: &Game, r: usize) -> StructuredProjector {
        StructuredProjector::conjugated(self.unitaries[r].clone(), self.answer_mask(|z| game.accepts(r, z)))
    }

    /// `U_r† (|z⟩⟨z| ⊗ I) U_r`.
    pub fn response_projector(&self, r: usize, z: usize) -> StructuredProjector {
        StructuredProjector::conjugated(self.unitaries[r].clone(), self.answer_mask(|y| y == z))
    }

    pub fn check(&self, game: &Game) -> Result<(), RewindError> {
        if self.unitaries.len() != game.questions || self.answer_dim != game.answers {
            return Err(RewindError::Invalid("strategy does not match the game".into()));
        }
        Ok(())
    }
}

/// `Val_G(S, ψ) = E_r ‖Π_f U_r ψ‖²`, by direct linear algebra over every `r`.
pub fn exact_value(game: &Game, s: &Strategy, psi: &DVector<C>) -> f64 {
    let total: f64 = (0..game.questions)
        .map(|r| {
            let ni = s.internal_dim;
            let y = s.unitaries[r].apply(psi);
            y.iter().enumerate().filter(|(x, _)| game.accepts(r, x / ni)).map(|(_, a)| a.norm_sqr()).sum::<f64>()
        })
        .sum();
    total / game.questions as f64
}

/// The same for a mixed state.
pub fn exact_value_density(game: &Game, s: &Strategy, rho: &DensityOp) -> Result<f64, RewindError> {
    let mut total = 0.0;
    for r in 0..game.questions {
        let pi = s.win_projector(game, r).to_dense()?;
        total += rho.probability(&pi);
    }
    Ok(total / game.questions as f64)
}

/// The state `|0⟩_Z |0⟩_I`.
pub fn ground_state(s: &Strategy) -> StateVector {
    StateVector::basis(s.dim(), 0)
}

/// Answer-independent strategy that always writes `z` into `Z`: `U_r` adds
/// `z` to the answer register.
pub fn fixed_answer_strategy(game: &Game, internal_dim: usize, z: usize) -> Strategy {
    let d = game.answers * internal_dim;
    let perm: Vec<usize> = (0..d)
        .map(|x| ((x / internal_dim + z) % game.answers) * internal_dim + x % internal_dim)
        .collect();
    let us = (0..game.questions).map(|_| UnitaryOp::Permutation(perm.clone())).collect();
    Strategy::new(game.answers, internal_dim, us).expect("dimensions agree")
}

/// Uniform superposition over answers, independent of `r`: a Fourier-like
/// unitary whose first column is uniform.
pub fn uniform_answer_strategy(game: &Game) -> Strategy {
    let n = game.answers;
    let f = DMatrix::from_fn(n, n, |j, k| {
        let ang = 2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
        C::from_polar(1.0 / (n as f64).sqrt(), ang)
    });
    let us = (0..game.questions).map(|_| UnitaryOp::Dense(f.clone())).collect();
    Strategy::new(n, 1, us).expect("dimensions agree")
}

/// Haar-random unitary per question.
pub fn random_strategy<R: Rng + ?Sized>(game: &Game, internal_dim: usize, rng: &mut R) -> Strategy {
    let d = game.answers * internal_dim;
    let us = (0..game.questions)
        .map(|_| UnitaryOp::Dense(crate::quantum_sim::state::random_unitary(d, rng)))
        .collect();
    Strategy::new(game.answers, internal_dim, us).expect("dimensions agree")
}

/// Overlap family: answers `0..=N`, win iff `z = 0`, and `U_r` is the
/// reflection exchanging `|0⟩` with `v_r = √ε|0⟩ + √(1−ε)|r+1⟩`, so that
/// `Π_{f,r} = |v_r⟩⟨v_r|` and `|0⟩` has value exactly `ε`.
pub fn overlap_game(questions: usize, epsilon: f64) -> Result<(Game, Strategy), RewindError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(RewindError::Invalid(format!("epsilon {epsilon} outside [0, 1]")));
    }
    let n = questions + 1;
    let game = Game::new(questions, n, |_, z| z == 0)?;
    let zero = DVector::from_fn(n, |i, _| if i == 0 { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) });
    let us = (0..questions)
        .map(|r| {
            let mut v = zero.clone() * C::new(epsilon.sqrt(), 0.0);
            v[r + 1] = C::new((1.0 - epsilon).sqrt(), 0.0);
            UnitaryOp::swap_reflection(&v, &zero).expect("real overlap")
        })
        .collect();
    Ok((game, Strategy::new(n, 1, us)?))
}

/// `v_r = √η|0⟩ + √(1−η) φ_r` with `φ_r` a random unit vector orthogonal to `|0⟩`.
pub fn tilted_vectors<R: Rng + ?Sized>(count: usize, dim: usize, eta: f64, rng: &mut R) -> Vec<DVector<C>> {
    (0..count)
        .map(|_| {
            let mut phi = random_gaussian_vector(dim, rng);
            phi[0] = C::new(0.0, 0.0);
            let phi = &phi / C::new(phi.norm(), 0.0);
            let mut v = phi * C::new((1.0 - eta).sqrt(), 0.0);
            v[0] = C::new(eta.sqrt(), 0.0);
            v
        })
        .collect()
}

/// Prover that answers `z*(r)` when its internal register reads 0 after a
/// challenge-dependent reflection, and `z*(r) + 1` otherwise. From
/// `|0⟩_Z|0⟩_I` it wins with probability exactly `η` on every challenge.
pub fn tilted_prover<R: Rng + ?Sized>(
    game: &Game,
    internal_dim: usize,
    eta: f64,
    correct: impl Fn(usize) -> usize,
    rng: &mut R,
) -> Result<Strategy, RewindError> {
    if internal_dim < 2 || !(0.0..=1.0).contains(&eta) {
        return Err(RewindError::Invalid("tilted prover needs I >= 2 and eta in [0, 1]".into()));
    }
    let nz = game.answers;
    let zero = DVector::from_fn(internal_dim, |i, _| if i == 0 { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) });
    let vs = tilted_vectors(game.questions, internal_dim, eta, rng);
    let mut us = Vec::with_capacity(game.questions);
    for (r, v) in vs.iter().enumerate() {
        let z = correct(r);
        if !game.accepts(r, z) || game.accepts(r, (z + 1) % nz) {
            return Err(RewindError::Invalid(format!("challenge {r}: need a unique accepting answer")));
        }
        let h = UnitaryOp::Local { left: nz, op: Box::new(UnitaryOp::swap_reflection(v, &zero)?), right: 1 };
        let perm: Vec<usize> = (0..nz * internal_dim)
            .map(|x| {
                let (zz, i) = (x / internal_dim, x % internal_dim);
                ((zz + z + usize::from(i != 0)) % nz) * internal_dim + i
            })
            .collect();
        us.push(UnitaryOp::Sequence(vec![h, UnitaryOp::Permutation(perm)]));
    }
    Strategy::new(nz, internal_dim, us)
}
