//! Small statistics helpers for the scenario checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation.
pub fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Standard error of the mean.
pub fn se(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    sd(xs) / (xs.len() as f64).sqrt()
}

/// Binomial standard error of a frequency evaluated at the bound `b`.
pub fn freq_sigma(b: f64, n: usize) -> f64 {
    let b = b.clamp(0.0, 1.0);
    (b * (1.0 - b) / n.max(1) as f64).sqrt()
}

/// Least squares `y = a x + b` and its `R²`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(u, v)| (v - (a * u + b)).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (a, b, r2)
}

/// Merges adjacent cells, left to right, until each expected count is at
/// least `min`; a short last group joins its neighbour.
pub fn merge_cells(expected: &[f64], min: f64) -> Vec<std::ops::Range<usize>> {
    let mut out: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (i, e) in expected.iter().enumerate() {
        acc += e;
        if acc >= min {
            out.push(start..i + 1);
            start = i + 1;
            acc = 0.0;
        }
    }
    if start < expected.len() {
        match out.last_mut() {
            Some(last) => last.end = expected.len(),
            None => out.push(0..expected.len()),
        }
    }
    out
}

/// Pearson goodness of fit of `counts` against probabilities `probs`, with
/// cells merged to expected count at least 5. Returns `(χ², dof, p-value)`.
pub fn chi2_gof(counts: &[u64], probs: &[f64]) -> (f64, usize, f64) {
    let n: u64 = counts.iter().sum();
    let expected: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
    let cells = merge_cells(&expected, 5.0);
    let stat: f64 = cells
        .iter()
        .map(|c| {
            let o: f64 = counts[c.clone()].iter().map(|&x| x as f64).sum();
            let e: f64 = expected[c.clone()].iter().sum();
            (o - e).powi(2) / e
        })
        .sum();
    let dof = cells.len().saturating_sub(1);
    (stat, dof, survival(stat, dof))
}

/// Two-sample χ² homogeneity test on count vectors over the same cells,
/// merging cells until the pooled expected count per sample is at least 5.
pub fn chi2_two_sample(a: &[u64], b: &[u64]) -> (f64, usize, f64) {
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let pooled: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| (x + y) as f64).collect();
    let scale = na.min(nb) / (na + nb);
    let cells = merge_cells(&pooled.iter().map(|p| p * scale).collect::<Vec<_>>(), 5.0);
    let mut stat = 0.0;
    for c in &cells {
        let tot: f64 = pooled[c.clone()].iter().sum();
        let oa: f64 = a[c.clone()].iter().map(|&x| x as f64).sum();
        let ob: f64 = b[c.clone()].iter().map(|&x| x as f64).sum();
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
    }
    let dof = cells.len().saturating_sub(1);
    (stat, dof, survival(stat, dof))
}

fn survival(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(stat)
}
