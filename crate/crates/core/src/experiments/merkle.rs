//! Merkle vector commitment: completeness on random openings and rejection
//! of every single-bit tamper.

use super::{field_bool, par_seeds, run_err, Check, Params, Result, Scenario};
use crate::hash_commitment::{vc_commit, vc_gen, vc_open, vc_verify, Commitment, HashFamily, OpeningProof};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};
use std::ops::Range;

pub const SCENARIO: Scenario = Scenario {
    name: "merkle",
    about: "vector commitment completeness and single-bit tamper rejection",
    default_seeds: (0, 1000),
    defaults,
    run,
    summarize,
};

fn defaults() -> Value {
    json!({ "lambda": 128, "max_len": 512, "max_queries": 16, "max_seconds": 5.0 })
}

fn family(p: &Params) -> HashFamily {
    HashFamily::sha256(p.usize("lambda") as u16)
}

fn trial(p: &Params, seed: u64) -> Result<Value> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let len = rng.random_range(1..=p.usize("max_len"));
    let ck = vc_gen(family(p), len, &mut rng).map_err(run_err)?;
    let m: Vec<Vec<u8>> = (0..len).map(|_| ck.random_symbol(&mut rng)).collect();
    let count = rng.random_range(1..=p.usize("max_queries").min(len));
    let mut q = sample(&mut rng, len, count).into_vec();
    q.sort_unstable();
    let (cm, aux) = vc_commit(&ck, &m).map_err(run_err)?;
    let pf = vc_open(&ck, &aux, &q).map_err(run_err)?;
    let values: Vec<Vec<u8>> = q.iter().map(|&i| m[i].clone()).collect();
    let complete = vc_verify(&ck, &cm, &q, &values, &pf);

    // Flip one uniformly chosen bit of (root, values, serialized proof).
    let root = cm.to_bytes();
    let flat_values: Vec<u8> = values.concat();
    let proof = pf.to_bytes();
    let total_bits = 8 * (root.len() + flat_values.len() + proof.len());
    let bit = rng.random_range(0..total_bits);
    let (mut root_t, mut values_t, mut proof_t) = (root.clone(), flat_values.clone(), proof.clone());
    let (target, byte) = if bit / 8 < root.len() {
        ("root", &mut root_t[bit / 8])
    } else if bit / 8 < root.len() + flat_values.len() {
        ("value", &mut values_t[bit / 8 - root.len()])
    } else {
        ("proof", &mut proof_t[bit / 8 - root.len() - flat_values.len()])
    };
    *byte ^= 1 << (bit % 8);
    let sb = ck.symbol_bytes();
    let tampered_values: Vec<Vec<u8>> = values_t.chunks(sb).map(|c| c.to_vec()).collect();
    let accepted = match (Commitment::from_bytes(&ck, &root_t), OpeningProof::from_bytes(&ck, &proof_t)) {
        (Ok(cm_t), Ok(pf_t)) => vc_verify(&ck, &cm_t, &q, &tampered_values, &pf_t),
        _ => false,
    };
    Ok(json!({
        "seed": seed,
        "len": len,
        "queries": q.len(),
        "complete": complete,
        "tamper_target": target,
        "tamper_bit": bit,
        "tamper_rejected": !accepted,
    }))
}

fn run(p: &Params, seeds: Range<u64>) -> Result<Vec<Value>> {
    par_seeds(seeds, |s| trial(p, s))
}

fn summarize(_: &Params, raw: &[Value]) -> Result<Vec<Check>> {
    let n = raw.len();
    let mut complete = 0;
    let mut rejected = 0;
    for r in raw {
        complete += usize::from(field_bool(r, "complete")?);
        rejected += usize::from(field_bool(r, "tamper_rejected")?);
    }
    Ok(vec![
        Check::exact_min("completeness", complete as f64 / n as f64, 1.0, n),
        Check::exact_min("tamper_rejection", rejected as f64 / n as f64, 1.0, n),
    ])
}
