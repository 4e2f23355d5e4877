//! The Marriott-Watrous outcome law of alternating binary measurements.

use rand::Rng;

/// `b_1 … b_t` with `b_0 = 1` implied: each bit repeats its predecessor
/// with probability `p`.
pub fn mwdist_sample<R: Rng + ?Sized>(p: f64, t: usize, rng: &mut R) -> Vec<bool> {
    let mut prev = true;
    (0..t)
        .map(|_| {
            if rng.random::<f64>() >= p {
                prev = !prev;
            }
            prev
        })
        .collect()
}

/// Repeated consecutive pairs and the number of pairs `n` for a string
/// `b_0 … b_n`.
pub fn nreps_count(b: &[bool]) -> (usize, usize) {
    assert!(b.len() >= 2, "nreps needs at least two bits");
    (b.windows(2).filter(|w| w[0] == w[1]).count(), b.len() - 1)
}

/// Fraction of consecutive repeated pairs.
pub fn nreps(b: &[bool]) -> f64 {
    let (k, n) = nreps_count(b);
    k as f64 / n as f64
}

/// `NReps(1, b_1, …, b_t)`: the outcome string with the implicit leading 1.
pub fn nreps_from_one(b: &[bool]) -> (usize, usize) {
    let mut full = Vec::with_capacity(b.len() + 1);
    full.push(true);
    full.extend_from_slice(b);
    nreps_count(&full)
}
