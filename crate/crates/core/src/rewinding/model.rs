//! Exact reduction of a game/strategy pair to the smallest subspace that
//! contains the initial state and is invariant under every win projector
//! (and, when the referee records answers, every accepting-answer
//! projector). Every procedure in this module only applies operators from
//! the algebra these projectors generate, so evolving inside the subspace
//! is exact; it just avoids carrying the unreachable dimensions.

use super::game::{Game, Strategy};
use super::RewindError;
use crate::quantum_sim::ops::StructuredProjector;
use crate::quantum_sim::state::C;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

const SPAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct GameModel {
    pub game: Arc<Game>,
    pub strategy: Arc<Strategy>,
    /// Isometry from model coordinates into `(Z, I)`.
    pub basis: DMatrix<C>,
    /// `Π_{f,r}` in model coordinates.
    pub win: Vec<DMatrix<C>>,
    /// Accepting answers and their projectors per question, when recorded.
    pub responses: Option<Vec<Vec<(usize, DMatrix<C>)>>>,
    /// Eigenpairs of the average win projector `Π̄ = E_r Π_{f,r}`.
    pub avg_values: DVector<f64>,
    pub avg_vectors: DMatrix<C>,
}

fn orthogonalize(v: &mut DVector<C>, cols: &[DVector<C>]) {
    for _ in 0..2 {
        for q in cols {
            let c = q.dotc(v);
            *v -= q * c;
        }
    }
}

impl GameModel {
    /// Reduces around the given seed states.
    pub fn reduced(
        game: Arc<Game>,
        strategy: Arc<Strategy>,
        seeds: &[DVector<C>],
        record_answers: bool,
    ) -> Result<Self, RewindError> {
        strategy.check(&game)?;
        let mut gens: Vec<StructuredProjector> =
            (0..game.questions).map(|r| strategy.win_projector(&game, r)).collect();
        if record_answers {
            for r in 0..game.questions {
                for z in game.accepting(r) {
                    gens.push(strategy.response_projector(r, z));
                }
            }
        }
        let mut cols: Vec<DVector<C>> = Vec::new();
        let push = |v: DVector<C>, cols: &mut Vec<DVector<C>>| {
            let scale = v.norm();
            let mut v = v;
            orthogonalize(&mut v, cols);
            let n = v.norm();
            if n > SPAN_TOL * scale.max(1.0) && n > SPAN_TOL {
                cols.push(v / C::new(n, 0.0));
            }
        };
        for s in seeds {
            push(s.clone(), &mut cols);
        }
        let mut next = 0;
        while next < cols.len() {
            let b = cols[next].clone();
            for g in &gens {
                push(g.apply(&b), &mut cols);
            }
            next += 1;
        }
        Self::from_basis(game, strategy, DMatrix::from_columns(&cols), record_answers)
    }

    /// The whole `(Z, I)` space.
    pub fn full(game: Arc<Game>, strategy: Arc<Strategy>, record_answers: bool) -> Result<Self, RewindError> {
        strategy.check(&game)?;
        let d = strategy.dim();
        Self::from_basis(game, strategy, DMatrix::identity(d, d), record_answers)
    }

    fn from_basis(
        game: Arc<Game>,
        strategy: Arc<Strategy>,
        basis: DMatrix<C>,
        record_answers: bool,
    ) -> Result<Self, RewindError> {
        let restrict = |p: &StructuredProjector| {
            let cols: Vec<DVector<C>> = basis.column_iter().map(|c| p.apply(&c.into_owned())).collect();
            let m = basis.adjoint() * DMatrix::from_columns(&cols);
            (&m + m.adjoint()) * C::new(0.5, 0.0)
        };
        let win: Vec<DMatrix<C>> = (0..game.questions).map(|r| restrict(&strategy.win_projector(&game, r))).collect();
        let responses = record_answers.then(|| {
            (0..game.questions)
                .map(|r| {
                    game.accepting(r).into_iter().map(|z| (z, restrict(&strategy.response_projector(r, z)))).collect()
                })
                .collect()
        });
        let k = basis.ncols();
        let avg = win.iter().fold(DMatrix::<C>::zeros(k, k), |acc, w| acc + w) / C::new(game.questions as f64, 0.0);
        let eig = avg.symmetric_eigen();
        Ok(GameModel {
            game,
            strategy,
            basis,
            win,
            responses,
            avg_values: eig.eigenvalues.map(|l| l.clamp(0.0, 1.0)),
            avg_vectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn embed(&self, x: &DVector<C>) -> DVector<C> {
        &self.basis * x
    }

    /// Coordinates of a full-space vector; fails if it leaves the subspace.
    pub fn restrict(&self, psi: &DVector<C>) -> Result<DVector<C>, RewindError> {
        let x = self.basis.ad_mul(psi);
        let off = (psi - &self.basis * &x).norm();
        if off > 1e-8 * psi.norm().max(1.0) {
            return Err(RewindError::Invalid(format!("state leaves the model subspace by {off:e}")));
        }
        Ok(x)
    }

    /// `Val_G(S, x) = ⟨x|Π̄|x⟩` for a normalized model vector.
    pub fn value(&self, x: &DVector<C>) -> f64 {
        self.win.iter().map(|w| (w * x).norm_squared()).sum::<f64>() / self.game.questions as f64
    }

    pub fn average_projector(&self) -> DMatrix<C> {
        let d = DMatrix::from_diagonal(&self.avg_values.map(|l| C::new(l, 0.0)));
        &self.avg_vectors * d * self.avg_vectors.adjoint()
    }
}
