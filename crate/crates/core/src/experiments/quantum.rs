//! Jordan decomposition residuals and the outcome law of alternating
//! projective measurements.

use super::stats::{chi2_gof, chi2_two_sample};
use super::{field_f64, par_seeds, run_err, Check, Params, Result, Scenario};
use crate::quantum_sim::binomial;
use crate::quantum_sim::mwdist::{mwdist_sample, nreps_from_one};
use crate::quantum_sim::state::{random_gaussian_vector, random_projector};
use crate::quantum_sim::{alternating_outcomes, jordan_decompose, StateVector, StructuredProjector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};
use std::ops::Range;

pub const JORDAN: Scenario = Scenario {
    name: "jordan",
    about: "Jordan decomposition of random projector pairs",
    default_seeds: (0, 100),
    defaults: jordan_defaults,
    run: jordan_run,
    summarize: jordan_summary,
};

fn jordan_defaults() -> Value {
    json!({ "max_dim": 32, "tol": 1e-8 })
}

fn jordan_run(p: &Params, seeds: Range<u64>) -> Result<Vec<Value>> {
    par_seeds(seeds, |seed| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let d = rng.random_range(2..=p.usize("max_dim"));
        let (ra, rb) = (rng.random_range(0..=d), rng.random_range(0..=d));
        let a = StructuredProjector::Dense(random_projector(d, ra, &mut rng));
        let b = StructuredProjector::Dense(random_projector(d, rb, &mut rng));
        // A failed decomposition is reported through its residual.
        let (res, subspaces) = match jordan_decompose(&a, &b, p.f64("tol")) {
            Ok(j) => (j.residuals.clone(), j.subspaces.len()),
            Err(crate::quantum_sim::QsimError::DecompositionFailed { residual, .. }) => {
                (crate::quantum_sim::jordan::JordanResiduals { reconstruction: residual, ..Default::default() }, 0)
            }
            Err(e) => return Err(run_err(e)),
        };
        Ok(json!({
            "seed": seed, "dim": d, "rank_a": ra, "rank_b": rb, "subspaces": subspaces,
            "reconstruction": res.reconstruction, "commutation": res.commutation,
            "eigenvalue": res.eigenvalue, "action": res.action, "phase": res.phase, "max": res.max(),
        }))
    })
}

fn jordan_summary(p: &Params, raw: &[Value]) -> Result<Vec<Check>> {
    let mut worst = 0f64;
    let mut phase = 0f64;
    for r in raw {
        worst = worst.max(field_f64(r, "max")?);
        phase = phase.max(field_f64(r, "phase")?);
    }
    let tol = p.f64("tol");
    Ok(vec![
        Check::exact_max("max_residual", worst, tol, raw.len()),
        Check::exact_max("phase_residual", phase, tol, raw.len()),
    ])
}

pub const ALTERNATING: Scenario = Scenario {
    name: "alternating",
    about: "alternating measurement outcomes against the Jordan-weighted Marriott-Watrous law",
    default_seeds: (0, 5),
    defaults: alternating_defaults,
    run: alternating_run,
    summarize: alternating_summary,
};

fn alternating_defaults() -> Value {
    json!({ "dim": 8, "t": 200, "trials": 1000, "significance": 0.01, "max_seconds": 120.0 })
}

fn alternating_run(p: &Params, seeds: Range<u64>) -> Result<Vec<Value>> {
    par_seeds(seeds, |seed| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let d = p.usize("dim");
        let t = p.usize("t");
        let (ra, rb) = (rng.random_range(1..d), rng.random_range(1..d));
        let a = StructuredProjector::Dense(random_projector(d, ra, &mut rng));
        let b = StructuredProjector::Dense(random_projector(d, rb, &mut rng));
        let psi = StateVector::from_unnormalized(b.apply(&random_gaussian_vector(d, &mut rng))).map_err(run_err)?;
        let jd = jordan_decompose(&a, &b, 1e-8).map_err(run_err)?;
        let weights = jd.weights(&psi.amps);
        let values: Vec<f64> = jd.subspaces.iter().map(|s| s.p).collect();
        let mut sim = vec![0u64; t + 1];
        let mut oracle = vec![0u64; t + 1];
        for _ in 0..p.usize("trials") {
            let (bits, _) = alternating_outcomes(&a, &b, &psi, t, &mut rng).map_err(run_err)?;
            sim[nreps_from_one(&bits).0] += 1;
            let j = crate::rewinding::valest::pick(&weights, &mut rng).expect("weights sum to 1");
            oracle[nreps_from_one(&mwdist_sample(values[j], t, &mut rng)).0] += 1;
        }
        Ok(json!({ "seed": seed, "dim": d, "t": t, "weights": weights, "values": values, "sim": sim, "oracle": oracle }))
    })
}

fn counts(v: &Value, k: &str) -> Vec<u64> {
    v[k].as_array().map(|a| a.iter().filter_map(|x| x.as_u64()).collect()).unwrap_or_default()
}

fn floats(v: &Value, k: &str) -> Vec<f64> {
    v[k].as_array().map(|a| a.iter().filter_map(|x| x.as_f64()).collect()).unwrap_or_default()
}

/// Exact law of `NReps` counts: `Σ_j w_j Bin(t, p_j)`.
pub fn mixture_law(weights: &[f64], values: &[f64], t: u64) -> Vec<f64> {
    (0..=t).map(|k| weights.iter().zip(values).map(|(w, &p)| w * binomial::pmf(t, k, p)).sum()).collect()
}

fn alternating_summary(p: &Params, raw: &[Value]) -> Result<Vec<Check>> {
    let alpha = p.f64("significance");
    let mut min_two = 1f64;
    let mut min_gof = 1f64;
    for r in raw {
        let (sim, oracle) = (counts(r, "sim"), counts(r, "oracle"));
        min_two = min_two.min(chi2_two_sample(&sim, &oracle).2);
        let law = mixture_law(&floats(r, "weights"), &floats(r, "values"), field_f64(r, "t")? as u64);
        min_gof = min_gof.min(chi2_gof(&sim, &law).2);
    }
    Ok(vec![
        Check::exact_min("chi2_vs_oracle_min_p", min_two, alpha, raw.len()),
        Check::exact_min("chi2_vs_exact_law_min_p", min_gof, alpha, raw.len()),
    ])
}
