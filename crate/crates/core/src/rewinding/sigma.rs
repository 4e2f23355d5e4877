//! A toy `k`-special-sound sigma protocol and its forking extractor.
//!
//! Group: the order-83 subgroup of `Z_167^*` generated by 4. The witness
//! is `w` with `x = g^w`. The prover picks a polynomial
//! `f(r) = w + c_1 r + … + c_{k−1} r^{k−1}` over `Z_83`, sends
//! `a_i = g^{c_i}`, and answers challenge `r ∈ {1, …, 64}` with `f(r)`.
//! The verifier checks `g^z = x · Π a_i^{r^i}`. Any `k` accepting answers
//! on distinct challenges interpolate `w`.

use super::fork::{fork, ForkOutcome};
use super::game::{tilted_vectors, Game, Strategy};
use super::model::GameModel;
use super::repeated::DEFAULT_C;
use super::RewindError;
use crate::quantum_sim::ops::UnitaryOp;
use crate::quantum_sim::state::C;
use nalgebra::DVector;
use rand::Rng;
use std::sync::Arc;

pub const MODULUS: u64 = 167;
pub const ORDER: u64 = 83;
pub const GENERATOR: u64 = 4;
pub const CHALLENGES: usize = 64;

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

fn inv_mod_q(a: u64) -> u64 {
    pow_mod(a, ORDER - 2, ORDER)
}

/// Challenge value of question index `r`.
pub fn challenge_value(r: usize) -> u64 {
    r as u64 + 1
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaInstance {
    pub k: usize,
    pub x: u64,
    /// First message `a_1 … a_{k−1}`.
    pub first: Vec<u64>,
}

impl SigmaInstance {
    pub fn verify(&self, r: usize, z: u64) -> bool {
        let rv = challenge_value(r);
        let mut rhs = self.x;
        for (i, &a) in self.first.iter().enumerate() {
            rhs = rhs * pow_mod(a, pow_mod(rv, i as u64 + 1, ORDER), MODULUS) % MODULUS;
        }
        pow_mod(GENERATOR, z, MODULUS) == rhs
    }

    pub fn game(&self) -> Game {
        Game::new(CHALLENGES, ORDER as usize, |r, z| self.verify(r, z as u64)).expect("fixed sizes")
    }
}

/// Honest prover state: witness and polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaProver {
    pub witness: u64,
    pub coeffs: Vec<u64>,
}

impl SigmaProver {
    pub fn new<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        assert!(k >= 1);
        SigmaProver { witness: rng.random_range(0..ORDER), coeffs: (1..k).map(|_| rng.random_range(0..ORDER)).collect() }
    }

    pub fn instance(&self) -> SigmaInstance {
        SigmaInstance {
            k: self.coeffs.len() + 1,
            x: pow_mod(GENERATOR, self.witness, MODULUS),
            first: self.coeffs.iter().map(|&c| pow_mod(GENERATOR, c, MODULUS)).collect(),
        }
    }

    pub fn respond(&self, r: usize) -> u64 {
        let rv = challenge_value(r);
        let mut acc = self.witness;
        for (i, &c) in self.coeffs.iter().enumerate() {
            acc = (acc + c * pow_mod(rv, i as u64 + 1, ORDER)) % ORDER;
        }
        acc
    }

    /// Quantum prover on `(Z, I)` that answers correctly with probability
    /// exactly `eta` on challenges where `valid` holds and never elsewhere.
    /// Its reachable states keep `Z ∈ {0, 82}` before the answer shift, so
    /// invalid challenges, which shift by `f(r) + 2`, always miss.
    pub fn quantum<R: Rng + ?Sized>(
        &self,
        internal_dim: usize,
        eta: f64,
        valid: impl Fn(usize) -> bool,
        rng: &mut R,
    ) -> Result<Strategy, RewindError> {
        if internal_dim < 2 || !(0.0..=1.0).contains(&eta) {
            return Err(RewindError::Invalid("need I >= 2 and eta in [0, 1]".into()));
        }
        let nz = ORDER as usize;
        let zero = DVector::from_fn(internal_dim, |i, _| C::new(if i == 0 { 1.0 } else { 0.0 }, 0.0));
        let vs = tilted_vectors(CHALLENGES, internal_dim, eta, rng);
        let mut us = Vec::with_capacity(CHALLENGES);
        for (r, v) in vs.iter().enumerate() {
            let z = self.respond(r) as usize;
            let ok = valid(r);
            let perm: Vec<usize> = (0..nz * internal_dim)
                .map(|x| {
                    let (zz, i) = (x / internal_dim, x % internal_dim);
                    let shift = if ok { usize::from(i != 0) } else { 2 };
                    ((zz + z + shift) % nz) * internal_dim + i
                })
                .collect();
            let h = UnitaryOp::Local { left: nz, op: Box::new(UnitaryOp::swap_reflection(v, &zero)?), right: 1 };
            us.push(UnitaryOp::Sequence(vec![h, UnitaryOp::Permutation(perm)]));
        }
        Strategy::new(nz, internal_dim, us)
    }
}

/// Lagrange interpolation of the constant term from `(r, z)` pairs with
/// distinct question indices.
pub fn interpolate_at_zero(points: &[(usize, u64)]) -> u64 {
    let mut acc = 0;
    for (j, &(rj, zj)) in points.iter().enumerate() {
        let xj = challenge_value(rj);
        let mut term = zj % ORDER;
        for (m, &(rm, _)) in points.iter().enumerate() {
            if m != j {
                let xm = challenge_value(rm);
                term = term * (ORDER - xm % ORDER) % ORDER * inv_mod_q((xj + ORDER - xm) % ORDER) % ORDER;
            }
        }
        acc = (acc + term) % ORDER;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOutcome {
    pub witness: Option<u64>,
    pub rounds: usize,
    pub fork: ForkOutcome,
}

/// Forks the prover `(s, |0⟩)` on `⌈8k/ε⌉` uniform challenges with
/// `η₀ = ε/2` and interpolates if at least `k` transcripts come back.
pub fn special_sound_extract<R: Rng + ?Sized>(
    inst: &SigmaInstance,
    s: Strategy,
    epsilon: f64,
    rng: &mut R,
) -> Result<ExtractOutcome, RewindError> {
    let game = Arc::new(inst.game());
    let strategy = Arc::new(s);
    let x0 = DVector::from_fn(strategy.dim(), |i, _| C::new(if i == 0 { 1.0 } else { 0.0 }, 0.0));
    let model = GameModel::reduced(game, strategy, std::slice::from_ref(&x0), true)?;
    let y0 = model.restrict(&x0)?;
    let rounds = (8.0 * inst.k as f64 / epsilon).ceil() as usize;
    let challenges: Vec<usize> = (0..rounds).map(|_| rng.random_range(0..CHALLENGES)).collect();
    let out = fork(&model, &y0, &challenges, epsilon / 2.0, DEFAULT_C, rng)?;
    let witness = (out.transcripts.len() >= inst.k).then(|| {
        let pts: Vec<(usize, u64)> = out.transcripts.iter().take(inst.k).map(|&(r, z)| (r, z as u64)).collect();
        interpolate_at_zero(&pts)
    });
    let witness = witness.filter(|&w| pow_mod(GENERATOR, w, MODULUS) == inst.x);
    Ok(ExtractOutcome { witness, rounds, fork: out })
}
