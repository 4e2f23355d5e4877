//! Binomial masses and truncated sampling, enumerated outward from the
//! point of the window closest to the mode so that cost tracks the
//! standard deviation rather than `n`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use statrs::function::factorial::ln_binomial;

/// Terms below this fraction of the largest are dropped.
const CUTOFF: f64 = 1e-18;

pub fn ln_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()
}

pub fn pmf(n: u64, k: u64, p: f64) -> f64 {
    ln_pmf(n, k, p).exp()
}

/// The non-negligible terms of the pmf restricted to `[lo, hi]`, as
/// `(k, weight)` with weights relative to the largest, plus that largest
/// term's log.
fn window_terms(n: u64, p: f64, lo: u64, hi: u64) -> (Vec<(u64, f64)>, f64) {
    let hi = hi.min(n);
    if lo > hi {
        return (Vec::new(), f64::NEG_INFINITY);
    }
    if p <= 0.0 || p >= 1.0 {
        let k = if p <= 0.0 { 0 } else { n };
        return if (lo..=hi).contains(&k) { (vec![(k, 1.0)], 0.0) } else { (Vec::new(), f64::NEG_INFINITY) };
    }
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as u64;
    let c = mode.clamp(lo, hi);
    let top = ln_pmf(n, c, p);
    let odds = p / (1.0 - p);
    let mut terms = vec![(c, 1.0)];
    let mut w = 1.0;
    let mut k = c;
    while k < hi {
        w *= (n - k) as f64 / (k + 1) as f64 * odds;
        k += 1;
        if w < CUTOFF {
            break;
        }
        terms.push((k, w));
    }
    let mut w = 1.0;
    let mut k = c;
    while k > lo {
        w *= k as f64 / (n - k + 1) as f64 / odds;
        k -= 1;
        if w < CUTOFF {
            break;
        }
        terms.push((k, w));
    }
    (terms, top)
}

/// `Pr[Bin(n, p) ∈ [lo, hi]]`.
pub fn mass(n: u64, p: f64, lo: u64, hi: u64) -> f64 {
    let (terms, top) = window_terms(n, p, lo, hi);
    if terms.is_empty() {
        return 0.0;
    }
    (top + terms.iter().map(|t| t.1).sum::<f64>().ln()).exp().min(1.0)
}

/// `Pr[Bin(n, p) ∉ [lo, hi]]`, summed directly rather than as `1 − mass`.
pub fn mass_outside(n: u64, p: f64, lo: u64, hi: u64) -> f64 {
    let below = if lo == 0 { 0.0 } else { mass(n, p, 0, lo - 1) };
    let above = if hi >= n { 0.0 } else { mass(n, p, hi + 1, n) };
    (below + above).min(1.0)
}

pub fn sample<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    Binomial::new(n, p.clamp(0.0, 1.0)).expect("valid binomial").sample(rng)
}

/// `Bin(n, p)` conditioned on `[lo, hi]`; `None` if the window has no mass.
pub fn sample_in<R: Rng + ?Sized>(n: u64, p: f64, lo: u64, hi: u64, rng: &mut R) -> Option<u64> {
    let (terms, _) = window_terms(n, p, lo, hi);
    pick(&terms, rng)
}

/// `Bin(n, p)` conditioned outside `[lo, hi]`.
pub fn sample_outside<R: Rng + ?Sized>(n: u64, p: f64, lo: u64, hi: u64, rng: &mut R) -> Option<u64> {
    let below = if lo == 0 { 0.0 } else { mass(n, p, 0, lo - 1) };
    let above = if hi >= n { 0.0 } else { mass(n, p, hi + 1, n) };
    if below + above <= 0.0 {
        return None;
    }
    if rng.random::<f64>() * (below + above) < below {
        sample_in(n, p, 0, lo - 1, rng)
    } else {
        sample_in(n, p, hi + 1, n, rng)
    }
}

fn pick<R: Rng + ?Sized>(terms: &[(u64, f64)], rng: &mut R) -> Option<u64> {
    let total: f64 = terms.iter().map(|t| t.1).sum();
    if terms.is_empty() || total <= 0.0 {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    for &(k, w) in terms {
        if u < w {
            return Some(k);
        }
        u -= w;
    }
    terms.last().map(|t| t.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masses_match_direct_sums() {
        for &(n, p) in &[(10u64, 0.3), (57, 0.71), (400, 0.25)] {
            let direct: Vec<f64> = (0..=n).map(|k| pmf(n, k, p)).collect();
            for &(lo, hi) in &[(0, n), (2, 5), (n / 2, n), (0, 0)] {
                let want: f64 = direct[lo as usize..=hi as usize].iter().sum();
                assert!((mass(n, p, lo, hi) - want).abs() < 1e-12);
                let out = 1.0 - want;
                assert!((mass_outside(n, p, lo, hi) - out).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_probabilities() {
        assert_eq!(mass(5, 0.0, 0, 0), 1.0);
        assert_eq!(mass(5, 1.0, 0, 4), 0.0);
        assert_eq!(mass(5, 1.0, 5, 5), 1.0);
    }
}
