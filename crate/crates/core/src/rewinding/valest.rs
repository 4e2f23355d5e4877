//! Value estimation by alternating the game measurement with a projection
//! onto `|+_R⟩`.
//!
//! Two implementations. [`ValEstWorkspace`] runs the procedure literally on
//! a control register (one basis label per `r` plus `⊤` and `⊥`; the
//! `R` register always equals the label's `r`, or 0, so it is folded in)
//! tensored with `(Z, I)`. [`SpectralValEst`] samples the same outcome law
//! and post-state from the eigen-decomposition of `Π̄ = E_r Π_{f,r}`: the
//! Jordan value of eigenvector `e_j` is `1/4 + λ_j/2`, and the outcome
//! string given `j` is Marriott-Watrous distributed, so only the repeat
//! counts matter. The spectral form makes the `t ≈ 10⁵` runs of the
//! repeated-game player affordable.

use super::game::{Game, Strategy};
use super::model::GameModel;
use super::repair::DilatedMeasurement;
use super::RewindError;
use crate::quantum_sim::binomial;
use crate::quantum_sim::measure::measure_binary;
use crate::quantum_sim::mwdist::nreps_from_one;
use crate::quantum_sim::ops::StructuredProjector;
use crate::quantum_sim::state::{RegisterLayout, StateVector, C};
use crate::quantum_sim::QsimError;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// `(ε, δ)` and the derived round count `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValEstParams {
    pub epsilon: f64,
    pub delta: f64,
    pub t: u64,
}

/// Chernoff sample count `ln(1/(2δ)) / (2ε²)`.
pub fn chernoff_n(epsilon: f64, delta: f64) -> f64 {
    (1.0 / (2.0 * delta)).ln() / (2.0 * epsilon * epsilon)
}

impl ValEstParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, RewindError> {
        if !(epsilon > 0.0 && epsilon < 1.0 && delta > 0.0 && delta < 1.0) {
            return Err(RewindError::Invalid(format!("(epsilon, delta) = ({epsilon}, {delta}) outside (0,1)^2")));
        }
        let a = (chernoff_n(epsilon / 2.0, delta / 4.0) / 2.0).ceil();
        let b = ((delta / 2.0).ln() / (5.0f64 / 8.0).ln()).ceil();
        let t = a.max(b).max(1.0) as u64;
        Ok(ValEstParams { epsilon, delta, t })
    }

    /// Number of repeats `m` out of `2t` pairs to the estimate `m/t − 1/2`.
    pub fn estimate(&self, repeats: u64) -> f64 {
        repeats as f64 / self.t as f64 - 0.5
    }

    /// Grid indices whose estimates lie in the closed interval `[lo, hi]`.
    pub fn grid_window(&self, lo: f64, hi: f64) -> Option<(u64, u64)> {
        let t = self.t as f64;
        let a = ((lo + 0.5) * t - 1e-9).ceil().max(0.0);
        let b = ((hi + 0.5) * t + 1e-9).floor().min(2.0 * t);
        (a <= b).then_some((a as u64, b as u64))
    }
}

/// Which label the discarded control register was left in after a run
/// whose tail never re-entered `|+_R⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Question(usize),
    Top,
    Bottom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValEstRecord {
    /// Repeated consecutive pairs in `(1, L_1, …, L_2t)`.
    pub repeats: u64,
    pub estimate: f64,
    /// Measurements after the main `2t`.
    pub tail: u64,
    /// Whether the run ended with the `|+_R⟩` measurement returning 1.
    pub settled: bool,
    pub label: Option<Label>,
}

impl ValEstRecord {
    pub fn measurements(&self, t: u64) -> u64 {
        2 * t + self.tail
    }
}

#[derive(Debug, Clone, Copy)]
enum Condition {
    All,
    Inside(u64, u64),
    Outside(u64, u64),
    Empty,
}

pub struct SpectralValEst<'a> {
    pub model: &'a GameModel,
    pub params: ValEstParams,
}

impl<'a> SpectralValEst<'a> {
    pub fn new(model: &'a GameModel, params: ValEstParams) -> Self {
        SpectralValEst { model, params }
    }

    /// Jordan values `1/4 + λ_j/2`.
    pub fn jordan_values(&self) -> Vec<f64> {
        self.model.avg_values.iter().map(|l| 0.25 + 0.5 * l).collect()
    }

    fn condition(&self, lo: f64, hi: f64, inside: bool) -> Condition {
        match (self.params.grid_window(lo, hi), inside) {
            (Some((a, b)), true) => Condition::Inside(a, b),
            (Some((a, b)), false) => Condition::Outside(a, b),
            (None, true) => Condition::Empty,
            (None, false) => Condition::All,
        }
    }

    /// Estimate and post-state for model vector `x` (normalized or not).
    pub fn run<R: Rng + ?Sized>(&self, x: &DVector<C>, rng: &mut R) -> Result<(ValEstRecord, DVector<C>), RewindError> {
        self.sample(x, Condition::All, rng)
    }

    fn sample<R: Rng + ?Sized>(
        &self,
        x: &DVector<C>,
        cond: Condition,
        rng: &mut R,
    ) -> Result<(ValEstRecord, DVector<C>), RewindError> {
        let n = 2 * self.params.t;
        let ps = self.jordan_values();
        let alpha = self.model.avg_vectors.ad_mul(x);
        let weights: Vec<f64> = alpha
            .iter()
            .zip(&ps)
            .map(|(a, &p)| {
                let w = a.norm_sqr();
                if w == 0.0 {
                    return 0.0;
                }
                w * match cond {
                    Condition::All => 1.0,
                    Condition::Inside(lo, hi) => binomial::mass(n, p, lo, hi),
                    Condition::Outside(lo, hi) => binomial::mass_outside(n, p, lo, hi),
                    Condition::Empty => 0.0,
                }
            })
            .collect();
        let j = pick(&weights, rng).ok_or(RewindError::Qsim(QsimError::Degenerate(0.0)))?;
        let p = ps[j];
        let m = match cond {
            Condition::All => binomial::sample(n, p, rng),
            Condition::Inside(lo, hi) => binomial::sample_in(n, p, lo, hi, rng).expect("positive weight"),
            Condition::Outside(lo, hi) => binomial::sample_outside(n, p, lo, hi, rng).expect("positive weight"),
            Condition::Empty => unreachable!(),
        };
        let (mut reps, mut flips) = (m, n - m);
        // L_2t = 1 iff an even number of flips from the leading 1.
        let mut bit = flips % 2 == 0;
        let mut tail = 0;
        let mut settled = bit;
        while !settled && tail < n {
            if rng.random::<f64>() < p {
                reps += 1;
            } else {
                flips += 1;
                bit = !bit;
            }
            tail += 1;
            // Tail measurements alternate game (odd count) and |+_R⟩ (even).
            if tail % 2 == 0 && bit {
                settled = true;
            }
        }
        let coeffs = amplitudes(&alpha, &ps, reps, flips);
        let mut record = ValEstRecord { repeats: m, estimate: self.params.estimate(m), tail, settled, label: None };
        let v = &self.model.avg_vectors;
        let post = if settled {
            v * coeffs
        } else {
            // Final state is Σ c_j w⁰_j with w⁰_j = (Π_G − p_j)|+_R⟩e_j / √(p_j(1−p_j)).
            let s = DVector::from_fn(coeffs.len(), |i, _| coeffs[i] / C::new((ps[i] * (1.0 - ps[i])).sqrt(), 0.0));
            let scale = |f: &dyn Fn(f64) -> f64| v * DVector::from_fn(s.len(), |i, _| s[i] * C::new(f(ps[i]), 0.0));
            let top = scale(&|p| (1.0 - p) / 2.0);
            let bottom = scale(&|p| -p / 2.0);
            let xs = v * &s;
            let ys = scale(&|p| p);
            let nr = self.model.game.questions;
            let norm = C::new(1.0 / (2.0 * nr as f64).sqrt(), 0.0);
            let mut parts: Vec<(Label, DVector<C>)> = vec![(Label::Top, top), (Label::Bottom, bottom)];
            for (r, w) in self.model.win.iter().enumerate() {
                parts.push((Label::Question(r), (w * &xs - &ys) * norm));
            }
            let ws: Vec<f64> = parts.iter().map(|(_, y)| y.norm_squared()).collect();
            let k = pick(&ws, rng).ok_or(RewindError::Qsim(QsimError::Degenerate(0.0)))?;
            record.label = Some(parts[k].0);
            parts.swap_remove(k).1
        };
        let nrm = post.norm();
        if !(nrm > 0.0) {
            return Err(RewindError::Qsim(QsimError::Degenerate(0.0)));
        }
        Ok((record, post / C::new(nrm, 0.0)))
    }
}

/// `α_j p_j^{reps/2} (1−p_j)^{flips/2}`, rescaled so the largest is 1.
fn amplitudes(alpha: &DVector<C>, ps: &[f64], reps: u64, flips: u64) -> DVector<C> {
    let logs: Vec<f64> = alpha
        .iter()
        .zip(ps)
        .map(|(a, &p)| {
            if a.norm() == 0.0 {
                f64::NEG_INFINITY
            } else {
                a.norm().ln() + 0.5 * reps as f64 * p.ln() + 0.5 * flips as f64 * (1.0 - p).ln()
            }
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    DVector::from_fn(alpha.len(), |i, _| {
        if logs[i] == f64::NEG_INFINITY {
            C::new(0.0, 0.0)
        } else {
            alpha[i] / C::new(alpha[i].norm(), 0.0) * C::new((logs[i] - top).exp(), 0.0)
        }
    })
}

pub(crate) fn pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return Some(i);
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0)
}

impl DilatedMeasurement for SpectralValEst<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn window_effect(&self, lo: f64, hi: f64) -> DMatrix<C> {
        let k = self.model.dim();
        let Some((a, b)) = self.params.grid_window(lo, hi) else {
            return DMatrix::zeros(k, k);
        };
        let n = 2 * self.params.t;
        let f = DVector::from_iterator(k, self.jordan_values().into_iter().map(|p| C::new(binomial::mass(n, p, a, b), 0.0)));
        let v = &self.model.avg_vectors;
        v * DMatrix::from_diagonal(&f) * v.adjoint()
    }

    fn measure<R: Rng + ?Sized>(&self, x: &DVector<C>, rng: &mut R) -> Result<(f64, DVector<C>), RewindError> {
        let (rec, post) = self.run(x, rng)?;
        Ok((rec.estimate, post))
    }

    fn measure_window<R: Rng + ?Sized>(
        &self,
        x: &DVector<C>,
        lo: f64,
        hi: f64,
        inside: bool,
        rng: &mut R,
    ) -> Result<(f64, DVector<C>), RewindError> {
        let (rec, post) = self.sample(x, self.condition(lo, hi, inside), rng)?;
        Ok((rec.estimate, post))
    }
}

/// The literal workspace: control labels `0..|R|` for `(r, r)`, then `⊤`
/// and `⊥` (both with `R = 0`), tensored with `(Z, I)`.
pub struct ValEstWorkspace {
    pub layout: RegisterLayout,
    pub plus: DVector<C>,
    pub pi_game: StructuredProjector,
    pub pi_plus: StructuredProjector,
    questions: usize,
    d: usize,
}

impl ValEstWorkspace {
    pub fn new(game: &Game, s: &Strategy) -> Result<Self, RewindError> {
        s.check(game)?;
        let nr = game.questions;
        let d = s.dim();
        let layout = RegisterLayout::new(vec![("label", nr + 2), ("Z", s.answer_dim), ("I", s.internal_dim)])?;
        let mut blocks: Vec<StructuredProjector> = (0..nr).map(|r| s.win_projector(game, r)).collect();
        blocks.push(StructuredProjector::identity(d));
        blocks.push(StructuredProjector::zero(d));
        let plus = DVector::from_fn(nr + 2, |i, _| {
            C::new(if i < nr { 1.0 / (2.0 * nr as f64).sqrt() } else { 0.5 }, 0.0)
        });
        let pi_plus = StructuredProjector::Local { left: 1, inner: Box::new(StructuredProjector::rank_one(&plus)), right: d };
        Ok(ValEstWorkspace { layout, plus, pi_game: StructuredProjector::Controlled(blocks), pi_plus, questions: nr, d })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// `|+_R⟩ ⊗ ψ`.
    pub fn initial(&self, psi: &StateVector) -> StateVector {
        let mut amps = DVector::zeros(self.dim());
        for l in 0..self.questions + 2 {
            amps.rows_mut(l * self.d, self.d).copy_from(&(&psi.amps * self.plus[l]));
        }
        StateVector { amps, layout: None }
    }

    /// Runs the procedure step by step. Returns the record, the outcome
    /// string `L_1 … L_2t` followed by any tail outcomes, and the state on
    /// `(Z, I)` after the control register is discarded.
    pub fn run<R: Rng + ?Sized>(
        &self,
        params: &ValEstParams,
        psi: &StateVector,
        rng: &mut R,
    ) -> Result<(ValEstRecord, Vec<bool>, StateVector), RewindError> {
        let mut state = self.initial(psi);
        let t = params.t as usize;
        let mut outcomes = Vec::with_capacity(2 * t);
        for _ in 0..t {
            let (a, s) = measure_binary(&self.pi_game, &state, rng)?;
            let (b, s) = measure_binary(&self.pi_plus, &s, rng)?;
            outcomes.extend([a, b]);
            state = s;
        }
        let (repeats, _) = nreps_from_one(&outcomes);
        let mut settled = outcomes[2 * t - 1];
        let mut tail = 0u64;
        while !settled && tail < 2 * params.t {
            let pi = if tail.is_multiple_of(2) { &self.pi_game } else { &self.pi_plus };
            let (b, s) = measure_binary(pi, &state, rng)?;
            state = s;
            outcomes.push(b);
            tail += 1;
            settled = tail.is_multiple_of(2) && b;
        }
        // Discarding the control register leaves the mixture of its blocks.
        let ws: Vec<f64> = (0..self.questions + 2).map(|l| state.amps.rows(l * self.d, self.d).norm_squared()).collect();
        let l = pick(&ws, rng).ok_or(RewindError::Qsim(QsimError::Degenerate(0.0)))?;
        let label = match l {
            l if l < self.questions => Label::Question(l),
            l if l == self.questions => Label::Top,
            _ => Label::Bottom,
        };
        let block = state.amps.rows(l * self.d, self.d).into_owned();
        let post = StateVector::from_unnormalized(block)?;
        let record = ValEstRecord {
            repeats: repeats as u64,
            estimate: params.estimate(repeats as u64),
            tail,
            settled,
            label: (!settled).then_some(label),
        };
        Ok((record, outcomes, post))
    }
}
