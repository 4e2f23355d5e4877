//! State repair after a disturbing measurement.
//!
//! `M` is any measurement with real outcomes that can be conditioned on an
//! outcome window. After `M` reports `p` and a projective `Π` has been
//! applied, [`repair`] alternates `Π` with the dilated window test
//! "`M` lands in `[p − ε, p + ε]`" until the window test passes or `T`
//! pairs have been spent. The run is sampled from the Jordan decomposition
//! of `G = Π F Π`, where `F` is the window effect of `M`: pick an
//! eigenvector `u_m` with weight `|⟨u_m|x⟩|²`, draw the outcome string with
//! repeat probability `μ_m`, and rebuild the post-state from the repeat
//! and flip counts.

use super::valest::pick;
use super::RewindError;
use crate::quantum_sim::state::C;
use crate::quantum_sim::QsimError;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A measurement with a Stinespring dilation that can be run conditioned
/// on whether its outcome lies in a closed window.
pub trait DilatedMeasurement {
    fn dim(&self) -> usize;

    /// POVM element of "outcome in `[lo, hi]`".
    fn window_effect(&self, lo: f64, hi: f64) -> DMatrix<C>;

    /// Outcome and post-state.
    fn measure<R: Rng + ?Sized>(&self, x: &DVector<C>, rng: &mut R) -> Result<(f64, DVector<C>), RewindError>;

    /// The same, conditioned on the outcome being inside (or outside) the
    /// window. The input need not be normalized; its norm is ignored.
    fn measure_window<R: Rng + ?Sized>(
        &self,
        x: &DVector<C>,
        lo: f64,
        hi: f64,
        inside: bool,
        rng: &mut R,
    ) -> Result<(f64, DVector<C>), RewindError>;
}

/// Projective measurement of an observable: outcome `values[i]` with
/// projector `projectors[i]`.
#[derive(Debug, Clone)]
pub struct ProjectiveMeasurement {
    pub values: Vec<f64>,
    pub projectors: Vec<DMatrix<C>>,
}

impl ProjectiveMeasurement {
    /// Spectral measurement of a Hermitian matrix; eigenvalues closer than
    /// `tol` share an outcome.
    pub fn from_observable(h: &DMatrix<C>, tol: f64) -> Self {
        let eig = h.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..h.nrows()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut values: Vec<f64> = Vec::new();
        let mut projectors: Vec<DMatrix<C>> = Vec::new();
        for i in order {
            let v = eig.eigenvectors.column(i);
            let p = v * v.adjoint();
            match values.last() {
                Some(&last) if (eig.eigenvalues[i] - last).abs() < tol => *projectors.last_mut().unwrap() += p,
                _ => {
                    values.push(eig.eigenvalues[i]);
                    projectors.push(p);
                }
            }
        }
        ProjectiveMeasurement { values, projectors }
    }

    fn branch<R: Rng + ?Sized>(
        &self,
        x: &DVector<C>,
        keep: impl Fn(f64) -> bool,
        rng: &mut R,
    ) -> Result<(f64, DVector<C>), RewindError> {
        let ws: Vec<f64> = self
            .values
            .iter()
            .zip(&self.projectors)
            .map(|(&v, p)| if keep(v) { (p * x).norm_squared() } else { 0.0 })
            .collect();
        let i = pick(&ws, rng).ok_or(RewindError::Qsim(QsimError::Degenerate(0.0)))?;
        let y = &self.projectors[i] * x;
        Ok((self.values[i], &y / C::new(y.norm(), 0.0)))
    }
}

impl DilatedMeasurement for ProjectiveMeasurement {
    fn dim(&self) -> usize {
        self.projectors.first().map_or(0, |p| p.nrows())
    }

    fn window_effect(&self, lo: f64, hi: f64) -> DMatrix<C> {
        let d = self.dim();
        self.values
            .iter()
            .zip(&self.projectors)
            .filter(|(&v, _)| v >= lo && v <= hi)
            .fold(DMatrix::zeros(d, d), |acc, (_, p)| acc + p)
    }

    fn measure<R: Rng + ?Sized>(&self, x: &DVector<C>, rng: &mut R) -> Result<(f64, DVector<C>), RewindError> {
        self.branch(x, |_| true, rng)
    }

    fn measure_window<R: Rng + ?Sized>(
        &self,
        x: &DVector<C>,
        lo: f64,
        hi: f64,
        inside: bool,
        rng: &mut R,
    ) -> Result<(f64, DVector<C>), RewindError> {
        self.branch(x, |v| (v >= lo && v <= hi) == inside, rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairOutcome {
    /// The window test passed within the budget.
    pub success: bool,
    /// `(Π, window)` pairs after the first window test.
    pub pairs: u64,
    /// Measurements made by the repair loop: `1 + 2 * pairs`.
    pub count: u64,
    /// Outcome of `M` reported by the last window test.
    pub value: f64,
}

/// Eigenvalues below this are treated as exact zeros of `μ` or `1 − μ`.
const MU_FLOOR: f64 = 1e-14;

/// Repairs `x ∈ img Π` towards the window `[lo, hi]` of `m`, spending at
/// most `budget` pairs. Returns the outcome and the post-state.
pub fn repair<M: DilatedMeasurement, R: Rng + ?Sized>(
    m: &M,
    pi: &DMatrix<C>,
    x: &DVector<C>,
    lo: f64,
    hi: f64,
    budget: u64,
    rng: &mut R,
) -> Result<(RepairOutcome, DVector<C>), RewindError> {
    if pi.nrows() != m.dim() || x.len() != m.dim() {
        return Err(RewindError::Qsim(QsimError::DimensionMismatch { expected: m.dim(), got: x.len() }));
    }
    let off = (x - pi * x).norm();
    if off > 1e-8 * x.norm().max(1.0) {
        return Err(RewindError::Invalid(format!("repair input leaves img(Π) by {off:e}")));
    }
    let f = m.window_effect(lo, hi);
    let g = pi * f * pi;
    let g = (&g + g.adjoint()) * C::new(0.5, 0.0);
    let eig = g.symmetric_eigen();
    let mu: Vec<f64> = eig.eigenvalues.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let beta = eig.eigenvectors.ad_mul(x);
    let ws: Vec<f64> = beta.iter().map(|b| b.norm_sqr()).collect();
    let j = pick(&ws, rng).ok_or(RewindError::Qsim(QsimError::Degenerate(0.0)))?;
    let p = mu[j];

    // Outcome string: Π = 1 implied, then window, then (Π, window) pairs.
    let (mut reps, mut flips) = (0u64, 0u64);
    let mut step = |bit: &mut bool, rng: &mut R| {
        if rng.random::<f64>() < p {
            reps += 1;
        } else {
            flips += 1;
            *bit = !*bit;
        }
    };
    let mut bit = true;
    step(&mut bit, rng);
    let mut pairs = 0;
    while !bit && pairs < budget {
        step(&mut bit, rng);
        step(&mut bit, rng);
        pairs += 1;
    }
    let success = bit;

    let logs: Vec<f64> = beta
        .iter()
        .zip(&mu)
        .map(|(b, &u)| {
            let term = |count: u64, q: f64| if count == 0 { 0.0 } else { 0.5 * count as f64 * q.ln() };
            let div = if success { u } else { 1.0 - u };
            if b.norm() == 0.0 || div < MU_FLOOR {
                f64::NEG_INFINITY
            } else {
                b.norm().ln() + term(reps, u) + term(flips, 1.0 - u) - 0.5 * div.ln()
            }
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(RewindError::Qsim(QsimError::Degenerate(0.0)));
    }
    let mut y = DVector::zeros(x.len());
    for (i, &l) in logs.iter().enumerate() {
        if l > f64::NEG_INFINITY {
            let phase = beta[i] / C::new(beta[i].norm(), 0.0);
            y += eig.eigenvectors.column(i) * (phase * C::new((l - top).exp(), 0.0));
        }
    }
    let (value, post) = m.measure_window(&y, lo, hi, success, rng)?;
    Ok((RepairOutcome { success, pairs, count: 1 + 2 * pairs, value }, post))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairExptRecord {
    pub p: f64,
    pub bit: bool,
    pub repair: RepairOutcome,
    pub p_after: f64,
}

/// `M → p`, `{Π, I − Π} → k`, repair with window `[p − ε, p + ε]`, then
/// `M → p′`.
pub fn repair_expt<M: DilatedMeasurement, R: Rng + ?Sized>(
    m: &M,
    pi: &DMatrix<C>,
    x: &DVector<C>,
    epsilon: f64,
    budget: u64,
    rng: &mut R,
) -> Result<(RepairExptRecord, DVector<C>), RewindError> {
    let (p, x1) = m.measure(x, rng)?;
    let y = pi * &x1;
    let p1 = y.norm_squared().clamp(0.0, 1.0);
    let bit = rng.random::<f64>() < p1;
    let (branch, side) = if bit {
        (y, pi.clone())
    } else {
        (&x1 - y, DMatrix::identity(pi.nrows(), pi.ncols()) - pi)
    };
    let nrm = branch.norm();
    if nrm < 1e-12 {
        return Err(RewindError::Qsim(QsimError::Degenerate(nrm * nrm)));
    }
    let x2 = branch / C::new(nrm, 0.0);
    let (outcome, x3) = repair(m, &side, &x2, p - epsilon, p + epsilon, budget, rng)?;
    let (p_after, x4) = m.measure(&x3, rng)?;
    Ok((RepairExptRecord { p, bit, repair: outcome, p_after }, x4))
}
