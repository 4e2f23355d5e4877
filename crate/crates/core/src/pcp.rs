//! Amplified CSP proof system: the proof string is the assignment itself and
//! the verifier reads the variables of `k` uniformly chosen constraints.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PcpError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("assignment is not a witness")]
    NotAWitness,
    #[error("invalid randomness: expected {expected} bits, got {got}")]
    InvalidRandomness { expected: usize, got: usize },
    #[error("randomness of {0} bits is too long to enumerate")]
    TooLarge(usize),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub vars: Vec<usize>,
    pub allowed: Vec<Vec<u32>>,
}

impl Constraint {
    pub fn accepts(&self, vals: &[u32]) -> bool {
        self.allowed.iter().any(|t| t.as_slice() == vals)
    }

    fn satisfied_by(&self, assignment: &[u32]) -> bool {
        let vals: Vec<u32> = self.vars.iter().map(|&v| assignment[v]).collect();
        self.accepts(&vals)
    }
}

/// Instance file format:
/// `{num_vars, alphabet_size, constraints: [{vars, allowed}], planted, gap}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspInstance {
    pub num_vars: usize,
    pub alphabet_size: u32,
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub planted: Option<Vec<u32>>,
    #[serde(default)]
    pub gap: f64,
}

impl CspInstance {
    pub fn validate(&self) -> Result<(), PcpError> {
        let bad = |m: String| Err(PcpError::InvalidInstance(m));
        if self.num_vars == 0 {
            return bad("no variables".into());
        }
        if self.alphabet_size < 2 {
            return bad("alphabet needs at least two symbols".into());
        }
        if !(0.0..=1.0).contains(&self.gap) {
            return bad(format!("gap {} outside [0, 1]", self.gap));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.vars.is_empty() || c.vars.iter().any(|&v| v >= self.num_vars) {
                return bad(format!("constraint {i} references a missing variable"));
            }
            for t in &c.allowed {
                if t.len() != c.vars.len() || t.iter().any(|&s| s >= self.alphabet_size) {
                    return bad(format!("constraint {i} has a malformed allowed tuple"));
                }
            }
        }
        if let Some(w) = &self.planted {
            if !self.is_satisfied_by(w) {
                return bad("planted assignment does not satisfy the instance".into());
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self, PcpError> {
        let x: CspInstance =
            serde_json::from_str(s).map_err(|e| PcpError::InvalidInstance(e.to_string()))?;
        x.validate()?;
        Ok(x)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, PcpError> {
        let s = std::fs::read_to_string(path).map_err(|e| PcpError::Io(e.to_string()))?;
        Self::from_json(&s)
    }

    /// Largest constraint arity.
    pub fn arity(&self) -> usize {
        self.constraints.iter().map(|c| c.vars.len()).max().unwrap_or(0)
    }

    pub fn is_satisfied_by(&self, w: &[u32]) -> bool {
        w.len() == self.num_vars
            && w.iter().all(|&s| s < self.alphabet_size)
            && self.constraints.iter().all(|c| c.satisfied_by(w))
    }

    pub fn violated(&self, w: &[u32]) -> usize {
        self.constraints.iter().filter(|c| !c.satisfied_by(w)).count()
    }

    /// Minimum fraction of violated constraints over all assignments, by
    /// exhaustive search. Refuses more than 2^24 assignments.
    pub fn measure_gap(&self) -> Result<f64, PcpError> {
        let total = (self.alphabet_size as f64).powi(self.num_vars as i32);
        if total > (1u64 << 24) as f64 {
            return Err(PcpError::TooLarge(self.num_vars));
        }
        if self.constraints.is_empty() {
            return Ok(0.0);
        }
        let mut w = vec![0u32; self.num_vars];
        let mut best = usize::MAX;
        loop {
            best = best.min(self.violated(&w));
            // odometer increment
            let mut i = 0;
            loop {
                if i == self.num_vars {
                    return Ok(best as f64 / self.constraints.len() as f64);
                }
                w[i] += 1;
                if w[i] < self.alphabet_size {
                    break;
                }
                w[i] = 0;
                i += 1;
            }
        }
    }
}

/// Proof string `π : [ℓ] -> Σ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcpString(pub Vec<u32>);

/// Knobs of the amplified verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcpConfig {
    /// Constraints read per challenge.
    pub k: usize,
    /// Extra bits per block beyond `ceil(log2 m)`; the modulo bias of each
    /// block is below `2^-slack_bits`.
    pub slack_bits: usize,
}

impl Default for PcpConfig {
    /// `k = 40` puts the soundness error of the shipped gap corpus (worst gap
    /// 1/6) below 2^-10.
    fn default() -> Self {
        PcpConfig { k: 40, slack_bits: 32 }
    }
}

impl PcpConfig {
    /// Smallest `k` with `(1 - gap)^k <= 2^-target_bits`.
    pub fn for_gap(gap: f64, target_bits: u32) -> Self {
        let k = if gap <= 0.0 || gap >= 1.0 {
            1
        } else {
            ((target_bits as f64 * std::f64::consts::LN_2) / -(1.0 - gap).ln()).ceil() as usize
        };
        PcpConfig { k: k.max(1), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcpParams {
    pub alphabet_size: u32,
    pub proof_len: usize,
    pub k: usize,
    pub block_bits: usize,
    /// Randomness complexity `rc = k * block_bits`.
    pub rc: usize,
    /// Query complexity bound `qc = k * arity`.
    pub qc: usize,
    pub soundness_error: f64,
    pub knowledge_error: f64,
}

impl PcpParams {
    pub fn new(x: &CspInstance, cfg: PcpConfig) -> Result<Self, PcpError> {
        x.validate()?;
        if cfg.k == 0 {
            return Err(PcpError::InvalidInstance("k must be positive".into()));
        }
        let m = x.constraints.len();
        let block_bits = crate::hash_commitment::ceil_log2(m.max(1)) + cfg.slack_bits;
        if block_bits == 0 || block_bits > 64 {
            return Err(PcpError::InvalidInstance(format!("block width {block_bits} unsupported")));
        }
        let soundness_error = if m == 0 {
            1.0
        } else {
            let total = 2f64.powi(block_bits as i32);
            let max_weight = (total / m as f64).ceil() / total;
            ((1.0 - x.gap) * m as f64 * max_weight).min(1.0).powi(cfg.k as i32)
        };
        Ok(PcpParams {
            alphabet_size: x.alphabet_size,
            proof_len: x.num_vars,
            k: cfg.k,
            block_bits,
            rc: cfg.k * block_bits,
            qc: (cfg.k * x.arity()).min(x.num_vars),
            soundness_error,
            knowledge_error: soundness_error,
        })
    }

    /// Bits needed for one symbol.
    pub fn symbol_bits(&self) -> usize {
        crate::hash_commitment::ceil_log2(self.alphabet_size as usize).max(1)
    }

    pub fn challenge_bytes(&self) -> usize {
        self.rc.div_ceil(8)
    }
}

/// PCP randomness: `bits` bits, packed most significant bit first, trailing
/// bits of the last byte zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Challenge {
    pub bits: usize,
    #[serde(with = "crate::hash_commitment::hex_bytes")]
    pub bytes: Vec<u8>,
}

impl Challenge {
    pub fn random<R: RngCore + ?Sized>(bits: usize, rng: &mut R) -> Self {
        let mut bytes = vec![0u8; bits.div_ceil(8)];
        rng.fill_bytes(&mut bytes);
        let spare = bytes.len() * 8 - bits;
        if let Some(last) = bytes.last_mut() {
            *last &= 0xFFu8.checked_shl(spare as u32).unwrap_or(0);
        }
        Challenge { bits, bytes }
    }

    /// Challenge whose bits are the low `bits` bits of `v`, most significant first.
    pub fn from_u64(v: u64, bits: usize) -> Self {
        assert!(bits <= 64);
        let mut c = Challenge { bits, bytes: vec![0; bits.div_ceil(8)] };
        for i in 0..bits {
            if (v >> (bits - 1 - i)) & 1 == 1 {
                c.bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        c
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.bytes[i / 8] >> (7 - i % 8)) & 1 == 1
    }

    pub fn is_canonical(&self) -> bool {
        let spare = (self.bytes.len() * 8).wrapping_sub(self.bits);
        self.bytes.len() == self.bits.div_ceil(8)
            && (spare == 0 || self.bytes.last().is_some_and(|b| b & ((1u8 << spare) - 1) == 0))
    }

    fn block(&self, start: usize, width: usize) -> u64 {
        (start..start + width).fold(0u64, |acc, i| (acc << 1) | self.bit(i) as u64)
    }
}

fn check_challenge(p: &PcpParams, r: &Challenge) -> Result<(), PcpError> {
    if r.bits != p.rc || !r.is_canonical() {
        return Err(PcpError::InvalidRandomness { expected: p.rc, got: r.bits });
    }
    Ok(())
}

/// Constraint indices chosen by `r`, one per block.
pub fn selected_constraints(
    x: &CspInstance,
    p: &PcpParams,
    r: &Challenge,
) -> Result<Vec<usize>, PcpError> {
    check_challenge(p, r)?;
    let m = x.constraints.len() as u64;
    if m == 0 {
        return Ok(Vec::new());
    }
    Ok((0..p.k).map(|i| (r.block(i * p.block_bits, p.block_bits) % m) as usize).collect())
}

pub fn pcp_prove(x: &CspInstance, w: &[u32]) -> Result<PcpString, PcpError> {
    if !x.is_satisfied_by(w) {
        return Err(PcpError::NotAWitness);
    }
    Ok(PcpString(w.to_vec()))
}

/// Sorted union of the variables of the selected constraints.
pub fn pcp_queries(x: &CspInstance, p: &PcpParams, r: &Challenge) -> Result<Vec<usize>, PcpError> {
    let set: BTreeSet<usize> = selected_constraints(x, p, r)?
        .into_iter()
        .flat_map(|c| x.constraints[c].vars.iter().copied())
        .collect();
    Ok(set.into_iter().collect())
}

/// Accepts iff every selected constraint is satisfied by `answers`. A
/// missing variable rejects.
pub fn pcp_decide(
    x: &CspInstance,
    p: &PcpParams,
    r: &Challenge,
    answers: &BTreeMap<usize, u32>,
) -> bool {
    let Ok(sel) = selected_constraints(x, p, r) else {
        return false;
    };
    sel.iter().all(|&c| {
        let con = &x.constraints[c];
        let vals: Option<Vec<u32>> = con.vars.iter().map(|v| answers.get(v).copied()).collect();
        vals.is_some_and(|v| con.accepts(&v))
    })
}

pub fn pcp_extract(x: &CspInstance, pi: &PcpString) -> Option<Vec<u32>> {
    x.is_satisfied_by(&pi.0).then(|| pi.0.clone())
}

/// Exact acceptance count over every `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinRate {
    pub accepting: u64,
    pub total: u64,
}

impl WinRate {
    pub fn value(&self) -> f64 {
        self.accepting as f64 / self.total as f64
    }
}

/// Brute-force `Pr_r[V^π accepts]` by enumerating all `2^rc` challenges.
pub fn pcp_win_rate(x: &CspInstance, p: &PcpParams, pi: &PcpString) -> Result<WinRate, PcpError> {
    if p.rc > 20 {
        return Err(PcpError::TooLarge(p.rc));
    }
    let total = 1u64 << p.rc;
    let accepting = (0..total)
        .filter(|&v| {
            let r = Challenge::from_u64(v, p.rc);
            let answers = answers_for(x, p, &r, pi);
            pcp_decide(x, p, &r, &answers)
        })
        .count() as u64;
    Ok(WinRate { accepting, total })
}

/// The same probability without enumeration: blocks are independent, so
/// acceptance is `(Σ_c w_c · [π satisfies c])^k` where `w_c` is the exact
/// fraction of block values mapping to constraint `c`.
pub fn pcp_win_rate_factored(x: &CspInstance, p: &PcpParams, pi: &PcpString) -> f64 {
    let m = x.constraints.len();
    if m == 0 {
        return 1.0;
    }
    if pi.0.len() != x.num_vars {
        return 0.0;
    }
    let total = 2f64.powi(p.block_bits as i32);
    let base = (total / m as f64).floor();
    let extra = total - base * m as f64;
    let sat: f64 = x
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.satisfied_by(&pi.0))
        .map(|(i, _)| if (i as f64) < extra { base + 1.0 } else { base })
        .sum::<f64>()
        / total;
    sat.powi(p.k as i32)
}

/// `π` restricted to the queries of `r`.
pub fn answers_for(x: &CspInstance, p: &PcpParams, r: &Challenge, pi: &PcpString) -> BTreeMap<usize, u32> {
    pcp_queries(x, p, r)
        .unwrap_or_default()
        .into_iter()
        .filter_map(|q| pi.0.get(q).map(|&s| (q, s)))
        .collect()
}

/// Local search for the assignment violating the fewest constraints.
pub fn hill_climb_best<R: Rng + ?Sized>(x: &CspInstance, restarts: usize, rng: &mut R) -> PcpString {
    let mut best: Option<(usize, Vec<u32>)> = None;
    for _ in 0..restarts.max(1) {
        let mut w: Vec<u32> = (0..x.num_vars).map(|_| rng.random_range(0..x.alphabet_size)).collect();
        let mut cur = x.violated(&w);
        loop {
            let mut improved = false;
            for v in 0..x.num_vars {
                let old = w[v];
                for s in 0..x.alphabet_size {
                    if s == old {
                        continue;
                    }
                    w[v] = s;
                    let c = x.violated(&w);
                    if c < cur {
                        cur = c;
                        improved = true;
                        break;
                    }
                    w[v] = old;
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(b, _)| cur < *b) {
            best = Some((cur, w));
        }
    }
    PcpString(best.expect("at least one restart").1)
}

fn coloring_constraint(a: usize, b: usize, colors: u32) -> Constraint {
    let allowed = (0..colors)
        .flat_map(|i| (0..colors).filter(move |&j| j != i).map(move |j| vec![i, j]))
        .collect();
    Constraint { vars: vec![a, b], allowed }
}

/// Random 3-colouring instance with a planted colouring. Edges only join
/// differently coloured vertices.
pub fn planted_coloring<R: Rng + ?Sized>(num_vars: usize, num_edges: usize, rng: &mut R) -> CspInstance {
    assert!(num_vars >= 2);
    let w: Vec<u32> = (0..num_vars).map(|_| rng.random_range(0..3)).collect();
    let mut constraints = Vec::with_capacity(num_edges);
    while constraints.len() < num_edges {
        let a = rng.random_range(0..num_vars);
        let b = rng.random_range(0..num_vars);
        if a != b && w[a] != w[b] {
            constraints.push(coloring_constraint(a, b, 3));
        }
        if w.iter().all(|&c| c == w[0]) {
            break;
        }
    }
    CspInstance { num_vars, alphabet_size: 3, constraints, planted: Some(w), gap: 0.0 }
}

/// Not-all-equal 3-SAT style instance over a binary alphabet with a
/// planted assignment.
pub fn planted_nae<R: Rng + ?Sized>(num_vars: usize, num_clauses: usize, rng: &mut R) -> CspInstance {
    assert!(num_vars >= 3);
    let w: Vec<u32> = (0..num_vars).map(|_| rng.random_range(0..2)).collect();
    let allowed: Vec<Vec<u32>> = (0..8u32)
        .map(|t| vec![t >> 2 & 1, t >> 1 & 1, t & 1])
        .filter(|t| !(t[0] == t[1] && t[1] == t[2]))
        .collect();
    let mut idx: Vec<usize> = (0..num_vars).collect();
    let mut constraints = Vec::with_capacity(num_clauses);
    let mixed = w.iter().any(|&b| b != w[0]);
    while mixed && constraints.len() < num_clauses {
        idx.shuffle(rng);
        let vars = idx[..3].to_vec();
        if !(w[vars[0]] == w[vars[1]] && w[vars[1]] == w[vars[2]]) {
            constraints.push(Constraint { vars, allowed: allowed.clone() });
        }
    }
    CspInstance { num_vars, alphabet_size: 2, constraints, planted: Some(w), gap: 0.0 }
}

/// 3-colouring of the complete graph `K_n`; unsatisfiable for `n >= 4`.
/// The gap is measured exhaustively.
pub fn clique_coloring(n: usize) -> CspInstance {
    let constraints = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .map(|(a, b)| coloring_constraint(a, b, 3))
        .collect();
    let mut x = CspInstance { num_vars: n, alphabet_size: 3, constraints, planted: None, gap: 0.0 };
    x.gap = x.measure_gap().expect("small clique");
    x
}
