//! Rewinding extractor for the argument against classical, resettable
//! provers: fix the first two messages, replay many challenges, stitch the
//! opened answers into a proof string.

use crate::hash_commitment::{vc_commit, vc_gen, vc_open, Commitment, CommitmentKey};
use crate::kilian_protocol::{verify_transcript, Response, Statement, Transcript};
use crate::pcp::{hill_climb_best, pcp_extract, pcp_queries, Challenge, PcpString};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashSet};

/// A malicious prover that can be rewound to just after its commitment.
/// `respond` must be a pure function of the committed state and `r`.
pub trait ClassicalProverOracle {
    fn commit(&mut self, st: &Statement, ck: &CommitmentKey) -> Commitment;
    fn respond(&self, st: &Statement, r: &Challenge) -> Response;
}

/// When a committed prover answers honestly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum AnswerPolicy {
    Always,
    /// Honest only on challenges whose first bit is 0.
    FirstBitZero,
    Never,
    /// Honest with probability `epsilon`, decided by hashing `(seed, r)`.
    Throttled { epsilon: f64, seed: u64 },
}

/// Commits to a fixed proof string and opens it according to the policy;
/// otherwise sends random symbols with the honest proof attached.
pub struct CommittedProver {
    pi: PcpString,
    policy: AnswerPolicy,
    garbage_seed: u64,
    state: Option<(CommitmentKey, crate::hash_commitment::MerkleAux)>,
}

impl CommittedProver {
    pub fn new(pi: PcpString, policy: AnswerPolicy, garbage_seed: u64) -> Self {
        CommittedProver { pi, policy, garbage_seed, state: None }
    }

    fn honest_on(&self, r: &Challenge) -> bool {
        match self.policy {
            AnswerPolicy::Always => true,
            AnswerPolicy::Never => false,
            AnswerPolicy::FirstBitZero => r.bits > 0 && !r.bit(0),
            AnswerPolicy::Throttled { epsilon, seed } => challenge_uniform(seed, r) < epsilon,
        }
    }
}

/// Uniform value in `[0, 1)` derived from `(seed, r)`.
fn challenge_uniform(seed: u64, r: &Challenge) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_be_bytes());
    h.update((r.bits as u64).to_be_bytes());
    h.update(&r.bytes);
    let d = h.finalize();
    let v = u64::from_be_bytes([d[0], d[1], d[2], d[3], d[4], d[5], d[6], d[7]]);
    (v >> 11) as f64 / (1u64 << 53) as f64
}

impl ClassicalProverOracle for CommittedProver {
    fn commit(&mut self, st: &Statement, ck: &CommitmentKey) -> Commitment {
        let leaves = st.encode_proof(ck, &self.pi);
        let (cm, aux) = vc_commit(ck, &leaves).expect("proof string has length ℓ");
        self.state = Some((ck.clone(), aux));
        cm
    }

    fn respond(&self, st: &Statement, r: &Challenge) -> Response {
        let (ck, aux) = self.state.as_ref().expect("commit before respond");
        let q = pcp_queries(&st.instance, &st.pcp, r).unwrap_or_default();
        let q = if q.is_empty() { vec![0] } else { q };
        let proof = vc_open(ck, aux, &q).expect("queries in range");
        let answers = if self.honest_on(r) {
            q.iter().map(|&i| aux.message[i].clone()).collect()
        } else {
            let mut seed = [0u8; 32];
            seed[..8].copy_from_slice(&self.garbage_seed.to_be_bytes());
            let d = Sha256::digest(&r.bytes);
            seed[8..].copy_from_slice(&d[..24]);
            let mut rng = ChaCha20Rng::from_seed(seed);
            q.iter().map(|_| ck.random_symbol(&mut rng)).collect()
        };
        Response { answers, proof }
    }
}

/// Named adversaries for the CLI and the experiment runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adversary {
    Honest,
    FirstBitZero,
    Garbage,
    Throttled,
    /// Commits to the best assignment a local search finds and opens it
    /// honestly. Useful on unsatisfiable instances.
    BestEffort,
}

impl Adversary {
    pub const ALL: [Adversary; 5] = [
        Adversary::Honest,
        Adversary::FirstBitZero,
        Adversary::Garbage,
        Adversary::Throttled,
        Adversary::BestEffort,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Adversary::Honest => "honest",
            Adversary::FirstBitZero => "first-bit-zero",
            Adversary::Garbage => "garbage",
            Adversary::Throttled => "throttled",
            Adversary::BestEffort => "best-effort",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    /// Builds the oracle. Honest-style adversaries use the planted witness
    /// when there is one and fall back to local search otherwise.
    pub fn build(&self, st: &Statement, epsilon: f64, seed: u64) -> CommittedProver {
        let x = &st.instance;
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed_0f_ad7e_5a1e);
        let best = || match &x.planted {
            Some(w) => PcpString(w.clone()),
            None => hill_climb_best(x, 8, &mut ChaCha20Rng::seed_from_u64(seed)),
        };
        let (pi, policy) = match self {
            Adversary::Honest => (best(), AnswerPolicy::Always),
            Adversary::FirstBitZero => (best(), AnswerPolicy::FirstBitZero),
            Adversary::Throttled => (best(), AnswerPolicy::Throttled { epsilon, seed }),
            Adversary::BestEffort => (
                hill_climb_best(x, 8, &mut ChaCha20Rng::seed_from_u64(seed)),
                AnswerPolicy::Always,
            ),
            Adversary::Garbage => (
                PcpString((0..x.num_vars).map(|_| rng.random_range(0..x.alphabet_size)).collect()),
                AnswerPolicy::Never,
            ),
        };
        CommittedProver::new(pi, policy, seed)
    }
}

/// Challenge budget for extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionBudget {
    pub n: usize,
    pub k_target: usize,
    pub epsilon: f64,
}

impl ExtractionBudget {
    /// `n = ceil(60 ℓ ln(2|Σ|) / ε)` and `k_target = ceil(6 ℓ ln(2|Σ|))`,
    /// natural logarithms throughout.
    pub fn new(len: usize, alphabet: u32, epsilon: f64) -> Self {
        let base = len as f64 * (2.0 * alphabet as f64).ln();
        let k_target = (6.0 * base).ceil().max(1.0) as usize;
        let n = ((60.0 * base) / epsilon).ceil() as usize;
        ExtractionBudget { n: n.max(k_target), k_target, epsilon }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortReason {
    TooFewTranscripts,
    Inconsistent,
    PcpExtractFailed,
}

impl AbortReason {
    pub fn name(&self) -> &'static str {
        match self {
            AbortReason::TooFewTranscripts => "too-few-transcripts",
            AbortReason::Inconsistent => "inconsistent",
            AbortReason::PcpExtractFailed => "pcp-extract-failed",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Extraction {
    pub witness: Option<Vec<u32>>,
    pub abort: Option<AbortReason>,
    /// Distinct accepted challenges.
    pub k: usize,
    pub budget: ExtractionBudget,
    /// Proof string assembled from the accepted transcripts, when consistent.
    pub assembled: Option<PcpString>,
}

/// Replays `challenges` against the oracle and keeps the accepting ones,
/// first occurrence per distinct challenge.
pub fn record_transcripts<O: ClassicalProverOracle + ?Sized>(
    oracle: &O,
    st: &Statement,
    ck: &CommitmentKey,
    cm: &Commitment,
    challenges: &[Challenge],
) -> Vec<(Challenge, Response)> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for r in challenges {
        if seen.contains(r) {
            continue;
        }
        let z = oracle.respond(st, r);
        let t = Transcript { ck: ck.clone(), cm: cm.clone(), r: r.clone(), z };
        if verify_transcript(st, &t) {
            seen.insert(r.clone());
            out.push((t.r, t.z));
        }
    }
    out
}

/// Merges opened answers into one proof string. Unfilled positions hold
/// symbol 0; two different values at one position give `None`.
pub fn assemble_pcp(
    st: &Statement,
    ck: &CommitmentKey,
    accepted: &[(Challenge, Response)],
) -> Option<PcpString> {
    let mut filled: BTreeMap<usize, u32> = BTreeMap::new();
    for (_, z) in accepted {
        for (&i, sym) in z.proof.indices.iter().zip(&z.answers) {
            let v = st.decode_symbol(ck, sym)?;
            let i = i as usize;
            if i >= st.pcp.proof_len {
                return None;
            }
            if *filled.entry(i).or_insert(v) != v {
                return None;
            }
        }
    }
    let mut pi = vec![0u32; st.pcp.proof_len];
    for (i, v) in filled {
        pi[i] = v;
    }
    Some(PcpString(pi))
}

/// Full extraction run: key, commitment, `n` challenges, assembly,
/// witness check.
pub fn extract_witness<O: ClassicalProverOracle + ?Sized, R: RngCore + ?Sized>(
    oracle: &mut O,
    st: &Statement,
    epsilon: f64,
    rng: &mut R,
) -> Extraction {
    assert!(epsilon > 0.0 && epsilon <= 1.0, "ε must lie in (0, 1]");
    let budget = ExtractionBudget::new(st.pcp.proof_len, st.pcp.alphabet_size, epsilon);
    let ck = vc_gen(st.family, st.pcp.proof_len, rng).expect("statement has a valid family");
    let cm = oracle.commit(st, &ck);
    let challenges: Vec<Challenge> = (0..budget.n).map(|_| Challenge::random(st.pcp.rc, rng)).collect();
    let accepted = record_transcripts(oracle, st, &ck, &cm, &challenges);
    let k = accepted.len();
    let fail = |abort, assembled| Extraction { witness: None, abort: Some(abort), k, budget, assembled };
    if k < budget.k_target {
        return fail(AbortReason::TooFewTranscripts, None);
    }
    let Some(pi) = assemble_pcp(st, &ck, &accepted) else {
        return fail(AbortReason::Inconsistent, None);
    };
    match pcp_extract(&st.instance, &pi) {
        Some(w) => Extraction { witness: Some(w), abort: None, k, budget, assembled: Some(pi) },
        None => fail(AbortReason::PcpExtractFailed, Some(pi)),
    }
}

/// Summary over many seeds, as printed by `kilian extract`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub adversary: String,
    pub epsilon: f64,
    pub seeds: (u64, u64),
    pub runs: usize,
    pub success_rate: f64,
    pub abort_histogram: BTreeMap<String, usize>,
    pub mean_k: f64,
    pub budget: ExtractionBudget,
}

/// Runs the extractor once per seed in `seeds` (half-open range).
pub fn extraction_report(st: &Statement, adversary: Adversary, epsilon: f64, seeds: std::ops::Range<u64>) -> ExtractionReport {
    use rayon::prelude::*;
    let runs: Vec<Extraction> = seeds
        .clone()
        .into_par_iter()
        .map(|s| {
            let mut oracle = adversary.build(st, epsilon, s);
            let mut rng = ChaCha20Rng::seed_from_u64(s);
            extract_witness(&mut oracle, st, epsilon, &mut rng)
        })
        .collect();
    let mut hist: BTreeMap<String, usize> =
        [AbortReason::TooFewTranscripts, AbortReason::Inconsistent, AbortReason::PcpExtractFailed]
            .iter()
            .map(|a| (a.name().to_string(), 0))
            .collect();
    for r in &runs {
        if let Some(a) = r.abort {
            *hist.get_mut(a.name()).expect("known reason") += 1;
        }
    }
    let n = runs.len().max(1) as f64;
    ExtractionReport {
        adversary: adversary.name().to_string(),
        epsilon,
        seeds: (seeds.start, seeds.end),
        runs: runs.len(),
        success_rate: runs.iter().filter(|r| r.witness.is_some()).count() as f64 / n,
        abort_histogram: hist,
        mean_k: runs.iter().map(|r| r.k as f64).sum::<f64>() / n,
        budget: ExtractionBudget::new(st.pcp.proof_len, st.pcp.alphabet_size, epsilon),
    }
}
