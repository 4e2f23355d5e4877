//! End-to-end argument: honest completeness, the rewinding extractor
//! against classical adversaries, and transcript size against `ℓ`.

use super::stats::{freq_sigma, linear_fit, mean};
use super::{field_bool, field_f64, par_seeds, rows, run_err, Check, Params, Result, Scenario};
use crate::classical_extractor::{extract_witness, Adversary};
use crate::hash_commitment::{ceil_log2, HashFamily};
use crate::kilian_protocol::{run_honest, transcript_size, Statement};
use crate::pcp::{clique_coloring, pcp_win_rate_factored, planted_coloring, CspInstance, PcpConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};
use std::ops::Range;
use std::sync::Arc;

pub const SCENARIO: Scenario = Scenario {
    name: "kilian-e2e",
    about: "honest runs, extraction against classical adversaries, succinctness",
    default_seeds: (0, 500),
    defaults,
    run,
    summarize,
};

fn defaults() -> Value {
    json!({
        "instance": "", "num_vars": 12, "num_edges": 24, "instance_seed": 1, "unsat_clique": 4,
        "lambda": 128, "pcp_k": 40, "epsilon": 0.3, "honest_trials": 1000,
        "succinct_lens": [64, 256, 1024, 4096], "succinct_k": 8, "succinct_trials": 4,
        "max_seconds": 1800.0
    })
}

fn statement(p: &Params, x: CspInstance, k: usize) -> Result<Arc<Statement>> {
    let cfg = PcpConfig { k, ..PcpConfig::default() };
    Ok(Arc::new(Statement::new(x, cfg, HashFamily::sha256(p.usize("lambda") as u16)).map_err(run_err)?))
}

fn satisfiable(p: &Params) -> Result<CspInstance> {
    let path = p.str("instance");
    if !path.is_empty() {
        return CspInstance::load(std::path::Path::new(path)).map_err(run_err);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(p.usize("instance_seed") as u64);
    Ok(planted_coloring(p.usize("num_vars"), p.usize("num_edges"), &mut rng))
}

fn run(p: &Params, seeds: Range<u64>) -> Result<Vec<Value>> {
    let sat = statement(p, satisfiable(p)?, p.usize("pcp_k"))?;
    let unsat = statement(p, clique_coloring(p.usize("unsat_clique")), p.usize("pcp_k"))?;
    let witness = sat.instance.planted.clone().ok_or_else(|| run_err("instance has no planted witness"))?;
    let eps = p.f64("epsilon");
    let mut out = Vec::new();

    let honest = par_seeds(0..p.usize("honest_trials") as u64, |s| {
        let (ok, t) = run_honest(sat.clone(), &witness, s).map_err(run_err)?;
        Ok(json!({ "kind": "honest", "seed": s, "accepted": ok, "bytes": transcript_size(&t) }))
    })?;
    out.extend(honest);

    let extract = par_seeds(seeds.clone(), |s| {
        let mut oracle = Adversary::Throttled.build(&sat, eps, s);
        let mut rng = ChaCha20Rng::seed_from_u64(s);
        let e = extract_witness(&mut oracle, &sat, eps, &mut rng);
        let win = e.assembled.as_ref().filter(|_| e.witness.is_some()).map(|pi| pcp_win_rate_factored(&sat.instance, &sat.pcp, pi));
        Ok(json!({
            "kind": "extract", "seed": s, "found": e.witness.is_some(),
            "valid": e.witness.as_ref().is_some_and(|w| sat.instance.is_satisfied_by(w)),
            "k": e.k, "n": e.budget.n, "abort": e.abort.map(|a| a.name()), "win_rate": win,
        }))
    })?;
    out.extend(extract);

    let unsat_rows = par_seeds(seeds, |s| {
        let mut rows = Vec::new();
        for adv in [Adversary::Throttled, Adversary::BestEffort] {
            let mut oracle = adv.build(&unsat, eps, s);
            let mut rng = ChaCha20Rng::seed_from_u64(s);
            let e = extract_witness(&mut oracle, &unsat, eps, &mut rng);
            rows.push(json!({ "kind": "unsat", "seed": s, "adversary": adv.name(), "found": e.witness.is_some(), "k": e.k }));
        }
        Ok(rows)
    })?;
    out.extend(unsat_rows.into_iter().flatten());

    for len in p.usize_list("succinct_lens") {
        let mut rng = ChaCha20Rng::seed_from_u64(len as u64);
        let x = planted_coloring(len, 2 * len, &mut rng);
        let w = x.planted.clone().expect("planted");
        let st = statement(p, x, p.usize("succinct_k"))?;
        for s in 0..p.usize("succinct_trials") as u64 {
            let (ok, t) = run_honest(st.clone(), &w, s).map_err(run_err)?;
            out.push(json!({
                "kind": "size", "len": len, "seed": s, "accepted": ok, "bytes": transcript_size(&t),
                "qc": st.pcp.qc, "log_len": ceil_log2(len), "digest_bits": st.family.output_bits(),
                "full_bytes": st.full_proof_bytes(),
            }));
        }
    }
    Ok(out)
}

fn summarize(p: &Params, raw: &[Value]) -> Result<Vec<Check>> {
    let eps = p.f64("epsilon");
    let honest: Vec<&Value> = rows(raw, "honest").collect();
    let mut acc = 0;
    for r in &honest {
        acc += usize::from(field_bool(r, "accepted")?);
    }
    let mut checks = vec![Check::exact_min("honest_acceptance", acc as f64 / honest.len().max(1) as f64, 1.0, honest.len())];

    let ext: Vec<&Value> = rows(raw, "extract").collect();
    let (mut found, mut invalid) = (0, 0);
    let mut margin = f64::INFINITY;
    for r in &ext {
        if field_bool(r, "found")? {
            found += 1;
            invalid += usize::from(!field_bool(r, "valid")?);
            let floor = field_f64(r, "k")? / (2.0 * field_f64(r, "n")?);
            margin = margin.min(field_f64(r, "win_rate")? - floor);
        }
    }
    let bound = eps / 8.0;
    let n = ext.len();
    checks.push(Check::at_least("extraction_rate", found as f64 / n.max(1) as f64, bound, freq_sigma(bound, n), n));
    let mut false_witnesses = invalid;
    for r in rows(raw, "unsat") {
        false_witnesses += usize::from(field_bool(r, "found")?);
    }
    checks.push(Check::exact_max("false_witnesses", false_witnesses as f64, 0.0, n));
    if found > 0 {
        checks.push(Check::exact_min("extracted_win_rate_margin", margin, 0.0, found));
    }

    // Mean transcript size per ℓ against qc · log ℓ · h.
    let lens = p.usize_list("succinct_lens");
    let (mut xs, mut ys, mut ratio, mut all_ok) = (Vec::new(), Vec::new(), f64::NAN, true);
    for &len in &lens {
        let rs: Vec<&Value> = rows(raw, "size").filter(|r| r["len"].as_u64() == Some(len as u64)).collect();
        let Some(first) = rs.first() else { continue };
        let bytes: Vec<f64> = rs.iter().map(|r| field_f64(r, "bytes")).collect::<Result<_>>()?;
        for r in &rs {
            all_ok &= field_bool(r, "accepted")?;
        }
        xs.push(field_f64(first, "qc")? * field_f64(first, "log_len")? * field_f64(first, "digest_bits")?);
        ys.push(mean(&bytes));
        if Some(&len) == lens.iter().max() {
            ratio = mean(&bytes) / field_f64(first, "full_bytes")?;
        }
    }
    if xs.len() >= 2 {
        let (_, _, r2) = linear_fit(&xs, &ys);
        checks.push(Check::exact_min("size_fit_r2", r2, 0.99, xs.len()));
        checks.push(Check::exact_max("size_ratio_at_max_len", ratio, 0.05, 1));
        checks.push(Check::exact_min("size_runs_accepted", f64::from(u8::from(all_ok)), 1.0, xs.len()));
    }
    Ok(checks)
}
