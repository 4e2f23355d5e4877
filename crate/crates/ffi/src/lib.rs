//! C ABI over `pqkilian`.
//!
//! Every function returns a [`PqkStatus`]. On failure the message is kept in
//! a thread-local slot readable with [`pqk_last_error`]. Objects are opaque
//! handles released with their `_free` function; byte buffers handed out by
//! the library are released with [`pqk_bytes_free`], strings with
//! [`pqk_string_free`].

#![allow(clippy::missing_safety_doc)]

use pqkilian::experiments::{parse_seeds, run_scenario, ScenarioConfig};
use pqkilian::hash_commitment::{
    vc_commit, vc_gen, vc_open, vc_verify, Commitment, CommitmentKey, HashFamily, MerkleAux,
    OpeningProof, VcError,
};
use pqkilian::kilian_protocol::{
    run_honest, verifier_msg1, verify_transcript, wire, Message, ProtocolError, ProverSession,
    Statement, Transcript, VerifierSession,
};
use pqkilian::pcp::{CspInstance, PcpConfig, PcpError};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Utf8 = 3,
    Parse = 4,
    NotAWitness = 5,
    Protocol = 6,
    Commitment = 7,
    Experiment = 8,
    /// The session is finished or poisoned.
    BadState = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqkFamily {
    Sha256 = 1,
    /// Insecure; for demonstrating collisions only.
    Toy = 2,
}

/// Library-owned byte buffer.
#[repr(C)]
pub struct PqkBytes {
    pub data: *mut u8,
    pub len: usize,
}

pub struct PqkStatement(Arc<Statement>);
pub struct PqkTranscript(Transcript);
pub struct PqkProver(ProverSession);
pub struct PqkVerifier {
    session: VerifierSession,
    rng: ChaCha20Rng,
    key_frame: Option<Vec<u8>>,
}
pub struct PqkVcKey(CommitmentKey);
pub struct PqkVcCommitment {
    cm: Commitment,
    aux: MerkleAux,
}

struct Failure(PqkStatus, String);

type Res<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail<T>(status: PqkStatus, msg: impl Into<String>) -> Res<T> {
    Err(Failure(status, msg.into()))
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        let status = match &e {
            ProtocolError::Pcp(PcpError::NotAWitness) => PqkStatus::NotAWitness,
            ProtocolError::Pcp(_) => PqkStatus::InvalidArgument,
            ProtocolError::Commitment(_) => PqkStatus::Commitment,
            ProtocolError::Poisoned | ProtocolError::OutOfOrder { .. } => PqkStatus::BadState,
            _ => PqkStatus::Protocol,
        };
        Failure(status, e.to_string())
    }
}

impl From<VcError> for Failure {
    fn from(e: VcError) -> Self {
        Failure(PqkStatus::Commitment, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Res<()>) -> PqkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PqkStatus::Ok
        }
        Ok(Err(Failure(s, m))) => {
            set_error(&m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            PqkStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Res<&'a T> {
    p.as_ref().map_or_else(|| fail(PqkStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Res<&'a mut T> {
    p.as_mut().map_or_else(|| fail(PqkStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn out<T>(p: *mut T, v: T, what: &str) -> Res<()> {
    if p.is_null() {
        return fail(PqkStatus::NullPointer, format!("{what} is null"));
    }
    p.write(v);
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return fail(PqkStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p).to_str().or_else(|_| fail(PqkStatus::Utf8, format!("{what} is not UTF-8")))
}

unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Res<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Res<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(PqkStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn bytes(v: Vec<u8>) -> PqkBytes {
    let b = v.into_boxed_slice();
    let len = b.len();
    PqkBytes { data: Box::into_raw(b) as *mut u8, len }
}

fn string(s: String) -> Res<*mut c_char> {
    CString::new(s).map(CString::into_raw).or_else(|_| fail(PqkStatus::Panic, "interior nul"))
}

/// `fam` is a `PqkFamily` value, taken as an integer so that stray values
/// from C are rejected rather than trusted.
fn family(fam: u32, lambda: u16) -> Res<HashFamily> {
    match fam {
        f if f == PqkFamily::Sha256 as u32 => Ok(HashFamily::sha256(lambda)),
        f if f == PqkFamily::Toy as u32 => Ok(HashFamily::toy(lambda)),
        f => fail(PqkStatus::InvalidArgument, format!("unknown hash family {f}")),
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full length including the NUL.
#[no_mangle]
pub unsafe extern "C" fn pqk_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let src = e.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = src.len().min(cap);
            std::ptr::copy_nonoverlapping(src.as_ptr() as *const c_char, buf, n);
            *buf.add(n - 1) = 0;
        }
        src.len()
    })
}

#[no_mangle]
pub unsafe extern "C" fn pqk_bytes_free(b: PqkBytes) {
    if !b.data.is_null() {
        drop(Box::from_raw(std::ptr::slice_from_raw_parts_mut(b.data, b.len)));
    }
}

#[no_mangle]
pub unsafe extern "C" fn pqk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a statement from a CSP instance in JSON form. `pcp_k` is the
/// number of constraints read per challenge.
#[no_mangle]
pub unsafe extern "C" fn pqk_statement_new(
    instance_json: *const c_char,
    pcp_k: usize,
    fam: u32,
    lambda: u16,
    out_statement: *mut *mut PqkStatement,
) -> PqkStatus {
    guard(|| {
        let x = CspInstance::from_json(text(instance_json, "instance_json")?)
            .or_else(|e| fail(PqkStatus::Parse, e.to_string()))?;
        let cfg = PcpConfig { k: pcp_k, ..PcpConfig::default() };
        let st = Statement::new(x, cfg, family(fam, lambda)?)?;
        out(out_statement, Box::into_raw(Box::new(PqkStatement(Arc::new(st)))), "out_statement")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pqk_statement_free(st: *mut PqkStatement) {
    if !st.is_null() {
        drop(Box::from_raw(st));
    }
}

/// Length of the PCP string and of the full encoded proof in bytes.
#[no_mangle]
pub unsafe extern "C" fn pqk_statement_sizes(
    st: *const PqkStatement,
    out_proof_len: *mut usize,
    out_proof_bytes: *mut usize,
) -> PqkStatus {
    guard(|| {
        let st = &get(st, "statement")?.0;
        out(out_proof_len, st.pcp.proof_len, "out_proof_len")?;
        out(out_proof_bytes, st.full_proof_bytes(), "out_proof_bytes")
    })
}

/// Honest run of both parties with verifier randomness from `seed`.
#[no_mangle]
pub unsafe extern "C" fn pqk_prove(
    st: *const PqkStatement,
    witness: *const u32,
    witness_len: usize,
    seed: u64,
    out_transcript: *mut *mut PqkTranscript,
    out_accepted: *mut bool,
) -> PqkStatus {
    guard(|| {
        let st = get(st, "statement")?.0.clone();
        let w = slice(witness, witness_len, "witness")?;
        let (ok, t) = run_honest(st, w, seed)?;
        out(out_accepted, ok, "out_accepted")?;
        out(out_transcript, Box::into_raw(Box::new(PqkTranscript(t))), "out_transcript")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pqk_verify(
    st: *const PqkStatement,
    t: *const PqkTranscript,
    out_accepted: *mut bool,
) -> PqkStatus {
    guard(|| {
        let st = &get(st, "statement")?.0;
        let t = &get(t, "transcript")?.0;
        out(out_accepted, verify_transcript(st, t), "out_accepted")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pqk_transcript_from_bytes(
    data: *const u8,
    len: usize,
    out_transcript: *mut *mut PqkTranscript,
) -> PqkStatus {
    guard(|| {
        let t = Transcript::from_bytes(slice(data, len, "data")?)
            .or_else(|e| fail(PqkStatus::Parse, e.to_string()))?;
        out(out_transcript, Box::into_raw(Box::new(PqkTranscript(t))), "out_transcript")
    })
}

/// Wire encoding: the four frames back to back.
#[no_mangle]
pub unsafe extern "C" fn pqk_transcript_to_bytes(t: *const PqkTranscript, out_bytes: *mut PqkBytes) -> PqkStatus {
    guard(|| {
        let t = &get(t, "transcript")?.0;
        out(out_bytes, bytes(t.to_bytes()), "out_bytes")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pqk_transcript_to_json(t: *const PqkTranscript, out_json: *mut *mut c_char) -> PqkStatus {
    guard(|| {
        let t = &get(t, "transcript")?.0;
        out(out_json, string(t.to_json())?, "out_json")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pqk_transcript_free(t: *mut PqkTranscript) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Prover side of a step-wise run. Fails with `NOT_A_WITNESS` up front.
#[no_mangle]
pub unsafe extern "C" fn pqk_prover_new(
    st: *const PqkStatement,
    witness: *const u32,
    witness_len: usize,
    out_prover: *mut *mut PqkProver,
) -> PqkStatus {
    guard(|| {
        let st = get(st, "statement")?.0.clone();
        let p = ProverSession::new(st, slice(witness, witness_len, "witness")?)?;
        out(out_prover, Box::into_raw(Box::new(PqkProver(p))), "out_prover")
    })
}

/// Feeds one verifier frame (key or challenge) and returns the reply frame.
#[no_mangle]
pub unsafe extern "C" fn pqk_prover_handle(
    p: *mut PqkProver,
    frame: *const u8,
    frame_len: usize,
    out_frame: *mut PqkBytes,
) -> PqkStatus {
    guard(|| {
        let p = &mut get_mut(p, "prover")?.0;
        let msg = decode_frame(slice(frame, frame_len, "frame")?, None)?;
        let reply = p.handle(msg)?;
        out(out_frame, bytes(wire::frame(&reply)), "out_frame")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pqk_prover_free(p: *mut PqkProver) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn decode_frame(data: &[u8], ck: Option<&CommitmentKey>) -> Res<Message> {
    let frames = wire::split_frames(data)?;
    match frames.as_slice() {
        [(tag, body)] => Ok(wire::decode(*tag, body, ck)?),
        _ => fail(PqkStatus::Protocol, "expected exactly one frame"),
    }
}

/// Verifier side of a step-wise run; its coins come from `seed`.
#[no_mangle]
pub unsafe extern "C" fn pqk_verifier_new(
    st: *const PqkStatement,
    seed: u64,
    out_verifier: *mut *mut PqkVerifier,
) -> PqkStatus {
    guard(|| {
        let st = get(st, "statement")?.0.clone();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (ck, session) = verifier_msg1(st, &mut rng)?;
        let key_frame = Some(wire::frame(&Message::Key(ck)));
        out(out_verifier, Box::into_raw(Box::new(PqkVerifier { session, rng, key_frame })), "out_verifier")
    })
}

/// The opening key frame. Available once.
#[no_mangle]
pub unsafe extern "C" fn pqk_verifier_start(v: *mut PqkVerifier, out_frame: *mut PqkBytes) -> PqkStatus {
    guard(|| {
        let v = get_mut(v, "verifier")?;
        match v.key_frame.take() {
            Some(f) => out(out_frame, bytes(f), "out_frame"),
            None => fail(PqkStatus::BadState, "key already sent"),
        }
    })
}

/// Feeds one prover frame. After a commitment `out_frame` holds the
/// challenge; after the response it is empty and `out_done` is set.
#[no_mangle]
pub unsafe extern "C" fn pqk_verifier_handle(
    v: *mut PqkVerifier,
    frame: *const u8,
    frame_len: usize,
    out_frame: *mut PqkBytes,
    out_done: *mut bool,
) -> PqkStatus {
    guard(|| {
        let v = get_mut(v, "verifier")?;
        let msg = decode_frame(slice(frame, frame_len, "frame")?, Some(v.session.key()))?;
        let reply = v.session.handle(msg, &mut v.rng)?;
        out(out_done, reply.is_none(), "out_done")?;
        let f = reply.map(|m| wire::frame(&m)).unwrap_or_default();
        out(out_frame, bytes(f), "out_frame")
    })
}

/// Verdict of a finished run.
#[no_mangle]
pub unsafe extern "C" fn pqk_verifier_verdict(v: *const PqkVerifier, out_accepted: *mut bool) -> PqkStatus {
    guard(|| {
        let v = get(v, "verifier")?;
        match v.session.verdict() {
            Some(ok) => out(out_accepted, ok, "out_accepted"),
            None => fail(PqkStatus::BadState, "run not finished"),
        }
    })
}

/// Transcript of a finished run; the caller owns the result.
#[no_mangle]
pub unsafe extern "C" fn pqk_verifier_transcript(
    v: *const PqkVerifier,
    out_transcript: *mut *mut PqkTranscript,
) -> PqkStatus {
    guard(|| {
        let v = get(v, "verifier")?;
        match v.session.transcript() {
            Some(t) => out(out_transcript, Box::into_raw(Box::new(PqkTranscript(t.clone()))), "out_transcript"),
            None => fail(PqkStatus::BadState, "run not finished"),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn pqk_verifier_free(v: *mut PqkVerifier) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// Samples a commitment key for vectors of length `len`.
#[no_mangle]
pub unsafe extern "C" fn pqk_vc_key_new(
    fam: u32,
    lambda: u16,
    len: usize,
    seed: u64,
    out_key: *mut *mut PqkVcKey,
) -> PqkStatus {
    guard(|| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let ck = vc_gen(family(fam, lambda)?, len, &mut rng)?;
        out(out_key, Box::into_raw(Box::new(PqkVcKey(ck))), "out_key")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pqk_vc_key_free(k: *mut PqkVcKey) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

fn symbols(ck: &CommitmentKey, values: &[u64]) -> Res<Vec<Vec<u8>>> {
    let width = ck.alphabet_width();
    if width < 64 && values.iter().any(|&v| v >> width != 0) {
        return fail(PqkStatus::InvalidArgument, format!("value wider than {width} bits"));
    }
    Ok(values.iter().map(|&v| ck.symbol(v)).collect())
}

/// Commits to `len` symbols given as integers.
#[no_mangle]
pub unsafe extern "C" fn pqk_vc_commit(
    k: *const PqkVcKey,
    values: *const u64,
    len: usize,
    out_commitment: *mut *mut PqkVcCommitment,
) -> PqkStatus {
    guard(|| {
        let ck = &get(k, "key")?.0;
        let m = symbols(ck, slice(values, len, "values")?)?;
        let (cm, aux) = vc_commit(ck, &m)?;
        out(out_commitment, Box::into_raw(Box::new(PqkVcCommitment { cm, aux })), "out_commitment")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pqk_vc_root(c: *const PqkVcCommitment, out_root: *mut PqkBytes) -> PqkStatus {
    guard(|| {
        let c = get(c, "commitment")?;
        out(out_root, bytes(c.cm.to_bytes()), "out_root")
    })
}

/// Opening proof for the positions in `queries`, serialized.
#[no_mangle]
pub unsafe extern "C" fn pqk_vc_open(
    k: *const PqkVcKey,
    c: *const PqkVcCommitment,
    queries: *const usize,
    nqueries: usize,
    out_proof: *mut PqkBytes,
) -> PqkStatus {
    guard(|| {
        let ck = &get(k, "key")?.0;
        let c = get(c, "commitment")?;
        let pf = vc_open(ck, &c.aux, slice(queries, nqueries, "queries")?)?;
        out(out_proof, bytes(pf.to_bytes()), "out_proof")
    })
}

/// Checks an opening. Malformed roots or proofs give `false`, not an error.
#[no_mangle]
pub unsafe extern "C" fn pqk_vc_verify(
    k: *const PqkVcKey,
    root: *const u8,
    root_len: usize,
    queries: *const usize,
    values: *const u64,
    nqueries: usize,
    proof: *const u8,
    proof_len: usize,
    out_valid: *mut bool,
) -> PqkStatus {
    guard(|| {
        let ck = &get(k, "key")?.0;
        let q = slice(queries, nqueries, "queries")?;
        let v = symbols(ck, slice(values, nqueries, "values")?)?;
        let root = slice(root, root_len, "root")?;
        let pf = slice(proof, proof_len, "proof")?;
        let ok = match (Commitment::from_bytes(ck, root), OpeningProof::from_bytes(ck, pf)) {
            (Ok(cm), Ok(pf)) => vc_verify(ck, &cm, q, &v, &pf),
            _ => false,
        };
        out(out_valid, ok, "out_valid")
    })
}

#[no_mangle]
pub unsafe extern "C" fn pqk_vc_commitment_free(c: *mut PqkVcCommitment) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Runs a named experiment. `config_json` and `seeds` (`"a..b"`) may be
/// null; `jobs == 0` uses every core. The report is returned as JSON.
#[no_mangle]
pub unsafe extern "C" fn pqk_run_scenario(
    name: *const c_char,
    config_json: *const c_char,
    seeds: *const c_char,
    jobs: usize,
    out_report_json: *mut *mut c_char,
    out_pass: *mut bool,
) -> PqkStatus {
    guard(|| {
        let name = text(name, "name")?;
        let cfg: ScenarioConfig = match opt_text(config_json, "config_json")? {
            Some(s) => serde_json::from_str(s).or_else(|e| fail(PqkStatus::Parse, e.to_string()))?,
            None => ScenarioConfig::default(),
        };
        let seeds = opt_text(seeds, "seeds")?
            .map(parse_seeds)
            .transpose()
            .or_else(|e| fail(PqkStatus::InvalidArgument, e.to_string()))?;
        let jobs = (jobs > 0).then_some(jobs);
        let report = run_scenario(name, &cfg, seeds, jobs).or_else(|e| fail(PqkStatus::Experiment, e.to_string()))?;
        let json = serde_json::to_string(&report).or_else(|e| fail(PqkStatus::Experiment, e.to_string()))?;
        out(out_pass, report.pass, "out_pass")?;
        out(out_report_json, string(json)?, "out_report_json")
    })
}
