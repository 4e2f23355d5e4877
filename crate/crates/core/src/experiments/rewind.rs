//! Value estimation, repair, repeated play, forking and special-sound
//! extraction.

use super::stats::{freq_sigma, mean, se};
use super::{field_bool, field_f64, par_seeds, rows, run_err, Check, ExpError, Params, Result, Scenario};
use crate::quantum_sim::state::C;
use crate::quantum_sim::StateVector;
use crate::rewinding::game::{exact_value, random_strategy, tilted_prover, overlap_game, Game, Strategy};
use crate::rewinding::repair::{repair_expt, ProjectiveMeasurement};
use crate::rewinding::sigma::{special_sound_extract, SigmaProver, CHALLENGES};
use crate::rewinding::{fork, naive_play, repeated_play, GameModel, RepeatedParams, SpectralValEst, ValEstParams, ValEstWorkspace};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};
use std::ops::Range;
use std::sync::Arc;

fn basis(d: usize, i: usize) -> DVector<C> {
    StateVector::basis(d, i).amps
}

/// The configured game: `random` (random table and Haar strategy) or
/// `overlap`.
fn build_game(p: &Params) -> Result<(Arc<Game>, Arc<Strategy>)> {
    let mut rng = ChaCha20Rng::seed_from_u64(p.usize("instance_seed") as u64);
    let (g, s) = match p.str("game") {
        "random" => {
            let (nq, na) = (p.usize("questions"), p.usize("answers"));
            let table: Vec<bool> = (0..nq * na).map(|_| rng.random::<bool>()).collect();
            let g = Game::new(nq, na, |r, z| table[r * na + z]).map_err(run_err)?;
            let s = random_strategy(&g, p.usize("internal"), &mut rng);
            (g, s)
        }
        "overlap" => overlap_game(p.usize("questions"), p.f64("game_epsilon")).map_err(run_err)?,
        other => return Err(ExpError::Config(format!("unknown game `{other}`"))),
    };
    Ok((Arc::new(g), Arc::new(s)))
}

fn game_defaults() -> serde_json::Map<String, Value> {
    json!({ "game": "random", "questions": 8, "answers": 4, "internal": 2, "game_epsilon": 0.5, "instance_seed": 7 })
        .as_object()
        .cloned()
        .expect("object")
}

fn with_game(extra: Value) -> Value {
    let mut m = game_defaults();
    m.extend(extra.as_object().cloned().expect("object"));
    Value::Object(m)
}

pub const VALEST: Scenario = Scenario {
    name: "valest",
    about: "value estimation: unbiasedness, almost-projectivity, value preservation",
    default_seeds: (0, 1000),
    defaults: valest_defaults,
    run: valest_run,
    summarize: valest_summary,
};

fn valest_defaults() -> Value {
    with_game(json!({ "epsilon": 0.1, "delta": 0.05, "max_seconds": 600.0 }))
}

fn valest_run(p: &Params, seeds: Range<u64>) -> Result<Vec<Value>> {
    let (g, s) = build_game(p)?;
    let ws = ValEstWorkspace::new(&g, &s).map_err(run_err)?;
    let ve = ValEstParams::new(p.f64("epsilon"), p.f64("delta")).map_err(run_err)?;
    let psi = StateVector::basis(s.dim(), 0);
    let exact = exact_value(&g, &s, &psi.amps);
    let model = GameModel::full(g.clone(), s.clone(), false).map_err(run_err)?;
    let spectral = SpectralValEst::new(&model, ve);
    par_seeds(seeds, |seed| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (first, _, post) = ws.run(&ve, &psi, &mut rng).map_err(run_err)?;
        let value_after = exact_value(&g, &s, &post.amps);
        let (second, _, _) = ws.run(&ve, &post, &mut rng).map_err(run_err)?;
        let (sp, _) = spectral.run(&psi.amps, &mut rng).map_err(run_err)?;
        Ok(json!({
            "kind": "valest", "seed": seed, "exact": exact, "t": ve.t,
            "p": first.estimate, "p2": second.estimate, "tail": first.tail, "settled": first.settled,
            "value_after": value_after, "spectral": sp.estimate,
        }))
    })
}

fn valest_summary(p: &Params, raw: &[Value]) -> Result<Vec<Check>> {
    let (eps, delta) = (p.f64("epsilon"), p.f64("delta"));
    let col = |k: &str| raw.iter().map(|r| field_f64(r, k)).collect::<Result<Vec<f64>>>();
    let (ps, p2s, sps, after) = (col("p")?, col("p2")?, col("spectral")?, col("value_after")?);
    let exact = raw.first().map(|r| field_f64(r, "exact")).transpose()?.unwrap_or(f64::NAN);
    let n = raw.len();
    let disagree = ps.iter().zip(&p2s).filter(|(a, b)| (*a - *b).abs() > eps).count() as f64 / n as f64;
    Ok(vec![
        Check::at_most("estimate_bias", (mean(&ps) - exact).abs(), 0.0, se(&ps), n),
        Check::at_most("spectral_estimate_bias", (mean(&sps) - exact).abs(), 0.0, se(&sps), n),
        Check::at_most("sequential_disagreement", disagree, delta, freq_sigma(delta, n), n),
        Check::at_least("post_state_value", mean(&after), exact - delta, se(&after), n),
    ])
}

pub const REPAIR: Scenario = Scenario {
    name: "repair",
    about: "measure, damage, repair, re-measure; plus the qubit termination bound",
    default_seeds: (0, 200),
    defaults: repair_defaults,
    run: repair_run,
    summarize: repair_summary,
};

fn repair_defaults() -> Value {
    with_game(json!({
        "epsilon": 0.1, "delta": 0.001, "budget": 16, "challenge": 0,
        "qubit_budgets": [4, 16, 64], "qubit_trials": 100, "max_seconds": 600.0
    }))
}

/// Overlap `q` at which `2q(1−q) = 1/(T+1)`, the worst case for the
/// qubit failure probability `2q(1−q)(1−2q(1−q))^T`.
pub fn worst_qubit_overlap(budget: u64) -> f64 {
    (1.0 - (1.0 - 2.0 / (budget as f64 + 1.0)).sqrt()) / 2.0
}

pub fn qubit_failure_probability(q: f64, budget: u64) -> f64 {
    let x = 2.0 * q * (1.0 - q);
    x * (1.0 - x).powi(budget as i32)
}

fn repair_run(p: &Params, seeds: Range<u64>) -> Result<Vec<Value>> {
    let (g, s) = build_game(p)?;
    let model = GameModel::full(g, s.clone(), false).map_err(run_err)?;
    let ve = ValEstParams::new(p.f64("epsilon"), p.f64("delta")).map_err(run_err)?;
    let m = SpectralValEst::new(&model, ve);
    let pi = model.win[p.usize("challenge")].clone();
    let x0 = basis(model.dim(), 0);
    let budget = p.usize("budget") as u64;
    let per_seed = par_seeds(seeds, |seed| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (rec, _) = repair_expt(&m, &pi, &x0, p.f64("epsilon"), budget, &mut rng).map_err(run_err)?;
        let mut out = vec![json!({
            "kind": "repair", "seed": seed, "p": rec.p, "bit": rec.bit, "p_after": rec.p_after,
            "success": rec.repair.success, "count": rec.repair.count,
        })];
        let obs = DMatrix::from_diagonal(&DVector::from_vec(vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]));
        let qm = ProjectiveMeasurement::from_observable(&obs, 1e-9);
        for budget in p.usize_list("qubit_budgets") {
            let q = worst_qubit_overlap(budget as u64);
            let theta = DVector::from_vec(vec![C::new(q.sqrt(), 0.0), C::new((1.0 - q).sqrt(), 0.0)]);
            let proj = &theta * theta.adjoint();
            let mut fails = 0;
            let trials = p.usize("qubit_trials");
            for _ in 0..trials {
                let (rec, _) = repair_expt(&qm, &proj, &basis(2, 0), 0.1, budget as u64, &mut rng).map_err(run_err)?;
                fails += usize::from(!rec.repair.success);
            }
            out.push(json!({ "kind": "qubit", "seed": seed, "budget": budget, "overlap": q, "trials": trials, "failures": fails }));
        }
        Ok(out)
    })?;
    Ok(per_seed.into_iter().flatten().collect())
}

fn repair_summary(p: &Params, raw: &[Value]) -> Result<Vec<Check>> {
    let (eps, delta) = (p.f64("epsilon"), p.f64("delta"));
    let budget = p.f64("budget");
    let outcomes = 2.0;
    let main: Vec<&Value> = rows(raw, "repair").collect();
    let n = main.len();
    let mut far = 0;
    let mut counts = Vec::with_capacity(n);
    for r in &main {
        far += usize::from((field_f64(r, "p")? - field_f64(r, "p_after")?).abs() > 2.0 * eps);
        counts.push(field_f64(r, "count")?);
    }
    let bound = outcomes * (delta + 1.0 / budget) + 4.0 * delta.sqrt();
    let mut checks = vec![
        Check::at_most("far_after_repair", far as f64 / n as f64, bound, freq_sigma(bound, n), n),
        Check::at_most("mean_repair_count", mean(&counts), outcomes + 4.0 * budget * delta.sqrt() + 1.0, se(&counts), n),
    ];
    for budget in p.usize_list("qubit_budgets") {
        let (mut fails, mut trials, mut q) = (0.0, 0.0, 0.0);
        for r in rows(raw, "qubit").filter(|r| r["budget"].as_u64() == Some(budget as u64)) {
            fails += field_f64(r, "failures")?;
            trials += field_f64(r, "trials")?;
            q = field_f64(r, "overlap")?;
        }
        let n = trials as usize;
        let freq = fails / trials;
        let exact = qubit_failure_probability(q, budget as u64);
        let cap = 1.0 / budget as f64;
        checks.push(Check::at_most(&format!("qubit_failure_T{budget}"), freq, cap, freq_sigma(cap, n), n));
        checks.push(Check::at_most(&format!("qubit_failure_exact_T{budget}"), (freq - exact).abs(), 0.0, freq_sigma(exact, n), n));
    }
    Ok(checks)
}

pub const REPETITION: Scenario = Scenario {
    name: "repetition",
    about: "naive repetition against the repaired repeated-game player on the overlap game",
    default_seeds: (0, 200),
    defaults: repetition_defaults,
    run: repetition_run,
    summarize: repetition_summary,
};

fn repetition_defaults() -> Value {
    json!({
        "questions": 16, "game_epsilon": 0.5, "rounds": 8, "eta0": 0.25, "c": 64.0,
        "naive_rounds": 16, "repaired": true, "max_seconds": 900.0
    })
}

fn repetition_run(p: &Params, seeds: Range<u64>) -> Result<Vec<Value>> {
    let nr = p.usize("questions");
    let (g, s) = overlap_game(nr, p.f64("game_epsilon")).map_err(run_err)?;
    let (g, s) = (Arc::new(g), Arc::new(s));
    let x0 = basis(s.dim(), 0);
    let value = exact_value(&g, &s, &x0);
    let model = GameModel::reduced(g, s, std::slice::from_ref(&x0), false).map_err(run_err)?;
    let y0 = model.restrict(&x0).map_err(run_err)?;
    let params = RepeatedParams::new(p.usize("rounds"), p.f64("eta0"), p.f64("c")).map_err(run_err)?;
    let repaired = p.0["repaired"].as_bool().unwrap_or(true);
    par_seeds(seeds, |seed| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..nr).collect();
        order.shuffle(&mut rng);
        let naive = naive_play(&model, &y0, &order[..p.usize("naive_rounds").min(nr)], &mut rng).map_err(run_err)?;
        let naive_wins = naive.iter().filter(|&&b| b).count();
        let (wins, estimates) = if repaired {
            let challenges: Vec<usize> = (0..params.rounds).map(|_| rng.random_range(0..nr)).collect();
            let (out, _) = repeated_play(&model, &y0, &params, &challenges, &mut rng).map_err(run_err)?;
            (Some(out.wins()), out.rounds.iter().map(|r| r.estimate).collect::<Vec<_>>())
        } else {
            (None, Vec::new())
        };
        let drops = estimates.windows(2).filter(|w| w[1] < w[0] - 2.0 * params.epsilon).count();
        Ok(json!({
            "seed": seed, "value": value, "naive_wins": naive_wins, "repaired_wins": wins,
            "estimates": estimates, "estimate_drops": drops,
        }))
    })
}

fn repetition_summary(p: &Params, raw: &[Value]) -> Result<Vec<Check>> {
    let eps = p.f64("game_epsilon");
    let n = raw.len();
    let naive: Vec<f64> = raw.iter().map(|r| field_f64(r, "naive_wins")).collect::<Result<_>>()?;
    let mut checks = vec![Check::at_most("naive_mean_wins", mean(&naive), 1.0 / (2.0 - 2.0 * eps), se(&naive), n)];
    let repaired: Vec<f64> = raw.iter().filter_map(|r| r["repaired_wins"].as_f64()).collect();
    if !repaired.is_empty() {
        let value = raw.first().map(|r| field_f64(r, "value")).transpose()?.unwrap_or(f64::NAN);
        let bound = p.f64("rounds") * (value - p.f64("eta0"));
        checks.push(Check::at_least("repaired_mean_wins", mean(&repaired), bound, se(&repaired), repaired.len()));
    }
    Ok(checks)
}

pub const FORK: Scenario = Scenario {
    name: "fork",
    about: "forking a toy quantum prover over a fixed challenge list",
    default_seeds: (0, 200),
    defaults: fork_defaults,
    run: fork_run,
    summarize: fork_summary,
};

fn fork_defaults() -> Value {
    json!({
        "questions": 64, "answers": 4, "internal": 4, "eta": 0.5, "rounds": 8,
        "eta0": 0.1, "c": 64.0, "instance_seed": 11, "max_seconds": 900.0
    })
}

fn fork_run(p: &Params, seeds: Range<u64>) -> Result<Vec<Value>> {
    let mut rng = ChaCha20Rng::seed_from_u64(p.usize("instance_seed") as u64);
    let (nr, na) = (p.usize("questions"), p.usize("answers"));
    let correct: Vec<usize> = (0..nr).map(|_| rng.random_range(0..na)).collect();
    let g = Game::new(nr, na, |r, z| z == correct[r]).map_err(run_err)?;
    let s = tilted_prover(&g, p.usize("internal"), p.f64("eta"), |r| correct[r], &mut rng).map_err(run_err)?;
    let (g, s) = (Arc::new(g), Arc::new(s));
    let x0 = basis(s.dim(), 0);
    let eta = exact_value(&g, &s, &x0);
    let model = GameModel::reduced(g, s, std::slice::from_ref(&x0), true).map_err(run_err)?;
    let y0 = model.restrict(&x0).map_err(run_err)?;
    par_seeds(seeds, |seed| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let challenges: Vec<usize> = (0..p.usize("rounds")).map(|_| rng.random_range(0..nr)).collect();
        let out = fork(&model, &y0, &challenges, p.f64("eta0"), p.f64("c"), &mut rng);
        let (size, ok) = match &out {
            Ok(o) => (o.transcripts.len(), true),
            Err(crate::rewinding::RewindError::Invalid(_)) => (0, false),
            Err(e) => return Err(run_err(e)),
        };
        let transcripts = out.map(|o| o.transcripts).unwrap_or_default();
        Ok(json!({ "seed": seed, "eta": eta, "size": size, "structure_ok": ok, "transcripts": transcripts }))
    })
}

fn fork_summary(p: &Params, raw: &[Value]) -> Result<Vec<Check>> {
    let n = raw.len();
    let sizes: Vec<f64> = raw.iter().map(|r| field_f64(r, "size")).collect::<Result<_>>()?;
    let mut bad = 0;
    for r in raw {
        bad += usize::from(!field_bool(r, "structure_ok")?);
    }
    let eta = raw.first().map(|r| field_f64(r, "eta")).transpose()?.unwrap_or(f64::NAN);
    let rounds = p.f64("rounds");
    let bound = rounds * (eta - p.f64("eta0")) - rounds * rounds / p.f64("questions");
    Ok(vec![
        Check::at_least("mean_transcripts", mean(&sizes), bound, se(&sizes), n),
        Check::exact_max("structure_violations", bad as f64, 0.0, n),
    ])
}

pub const SIGMA: Scenario = Scenario {
    name: "sigma",
    about: "special-sound extraction from a forked quantum prover",
    default_seeds: (0, 50),
    defaults: sigma_defaults,
    run: sigma_run,
    summarize: sigma_summary,
};

fn sigma_defaults() -> Value {
    json!({ "k": 3, "epsilon": 0.5, "eta": 1.0, "internal": 2, "valid_challenges": 64, "max_seconds": 600.0 })
}

fn sigma_run(p: &Params, seeds: Range<u64>) -> Result<Vec<Value>> {
    par_seeds(seeds, |seed| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let prover = SigmaProver::new(p.usize("k"), &mut rng);
        let inst = prover.instance();
        let valid = p.usize("valid_challenges").min(CHALLENGES);
        let s = prover.quantum(p.usize("internal"), p.f64("eta"), |r| r < valid, &mut rng).map_err(run_err)?;
        let out = special_sound_extract(&inst, s, p.f64("epsilon"), &mut rng).map_err(run_err)?;
        Ok(json!({
            "seed": seed, "rounds": out.rounds, "transcripts": out.fork.transcripts.len(),
            "recovered": out.witness == Some(prover.witness),
            "wrong": out.witness.is_some_and(|w| w != prover.witness),
        }))
    })
}

fn sigma_summary(p: &Params, raw: &[Value]) -> Result<Vec<Check>> {
    let n = raw.len();
    let mut rec = 0;
    let mut wrong = 0;
    for r in raw {
        rec += usize::from(field_bool(r, "recovered")?);
        wrong += usize::from(field_bool(r, "wrong")?);
    }
    let rate = rec as f64 / n as f64;
    let mut checks = vec![Check::exact_max("wrong_witnesses", wrong as f64, 0.0, n)];
    if p.usize("valid_challenges") >= p.usize("k") {
        let bound = p.f64("epsilon") / 8.0;
        checks.push(Check::at_least("recovery_rate", rate, bound, freq_sigma(bound, n), n));
    } else {
        checks.push(Check::exact_max("recovery_rate", rate, 0.0, n));
    }
    Ok(checks)
}
