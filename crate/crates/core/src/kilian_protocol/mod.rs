//! Four-message succinct argument built from the CSP proof system and the
//! Merkle commitment: key, commitment, challenge, opened answers.

pub mod transport;
pub mod wire;

use crate::hash_commitment::{
    bits_to_u64, is_canonical, vc_commit, vc_gen, vc_open, vc_verify, Commitment, CommitmentKey,
    HashFamily, MerkleAux, OpeningProof, VcError,
};
use crate::pcp::{
    pcp_decide, pcp_prove, pcp_queries, Challenge, CspInstance, PcpConfig, PcpError, PcpParams,
    PcpString,
};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("message out of order: expected {expected}, got {got}")]
    OutOfOrder { expected: &'static str, got: &'static str },
    #[error("session is poisoned by an earlier error")]
    Poisoned,
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("key does not match the statement")]
    KeyMismatch,
    #[error(transparent)]
    Commitment(#[from] VcError),
    #[error(transparent)]
    Pcp(#[from] PcpError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Everything both parties agree on before the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub instance: CspInstance,
    pub pcp: PcpParams,
    pub family: HashFamily,
}

impl Statement {
    pub fn new(instance: CspInstance, cfg: PcpConfig, family: HashFamily) -> Result<Self, ProtocolError> {
        family.validate()?;
        let pcp = PcpParams::new(&instance, cfg)?;
        if (instance.alphabet_size as u64) > (1u64 << family.input_bits().min(32)) {
            return Err(ProtocolError::Malformed("alphabet does not fit a leaf symbol".into()));
        }
        Ok(Statement { instance, pcp, family })
    }

    /// Leaf encoding of a proof symbol.
    pub fn encode_symbol(&self, ck: &CommitmentKey, s: u32) -> Vec<u8> {
        ck.symbol(s as u64)
    }

    /// Inverse of `encode_symbol`; `None` for anything that is not a
    /// canonical leaf holding a value below 2^32.
    pub fn decode_symbol(&self, ck: &CommitmentKey, bytes: &[u8]) -> Option<u32> {
        if !is_canonical(bytes, ck.alphabet_width()) {
            return None;
        }
        let cut = bytes.len().saturating_sub(4);
        if bytes[..cut].iter().any(|&b| b != 0) {
            return None;
        }
        u32::try_from(bits_to_u64(&bytes[cut..])).ok()
    }

    pub fn encode_proof(&self, ck: &CommitmentKey, pi: &PcpString) -> Vec<Vec<u8>> {
        pi.0.iter().map(|&s| self.encode_symbol(ck, s)).collect()
    }

    /// Size in bytes of sending the whole proof string as leaf symbols.
    pub fn full_proof_bytes(&self) -> usize {
        self.pcp.proof_len * self.family.input_bytes()
    }
}

/// Third-round payload `z = (π[Q], pf)`. `answers[j]` is the symbol at
/// `proof.indices[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    #[serde(with = "hex_vec")]
    pub answers: Vec<Vec<u8>>,
    pub proof: OpeningProof,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum Message {
    Key(CommitmentKey),
    Commit(Commitment),
    Challenge(Challenge),
    Response(Response),
}

impl Message {
    pub fn name(&self) -> &'static str {
        match self {
            Message::Key(_) => "key",
            Message::Commit(_) => "commitment",
            Message::Challenge(_) => "challenge",
            Message::Response(_) => "response",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub ck: CommitmentKey,
    pub cm: Commitment,
    pub r: Challenge,
    pub z: Response,
}

impl Transcript {
    pub fn messages(&self) -> [Message; 4] {
        [
            Message::Key(self.ck.clone()),
            Message::Commit(self.cm.clone()),
            Message::Challenge(self.r.clone()),
            Message::Response(self.z.clone()),
        ]
    }

    /// The four frames back to back.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.messages().iter().flat_map(wire::frame).collect()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let frames = wire::split_frames(bytes)?;
        let tags: Vec<u8> = frames.iter().map(|f| f.0).collect();
        if tags != [wire::TAG_KEY, wire::TAG_COMMIT, wire::TAG_CHALLENGE, wire::TAG_RESPONSE] {
            return Err(ProtocolError::Malformed(format!("frame tags {tags:?}")));
        }
        let ck = wire::decode_key(frames[0].1)?;
        let cm = Commitment::from_bytes(&ck, frames[1].1)?;
        let r = wire::decode_challenge(frames[2].1)?;
        let z = wire::decode_response(&ck, frames[3].1)?;
        Ok(Transcript { ck, cm, r, z })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ProtocolError> {
        serde_json::from_str(s).map_err(|e| ProtocolError::Malformed(e.to_string()))
    }
}

/// Exact serialized size of the four messages.
pub fn transcript_size(t: &Transcript) -> usize {
    t.messages().iter().map(|m| 5 + wire::encode(m).1.len()).sum()
}

/// Public check of a transcript against the statement.
pub fn verify_transcript(st: &Statement, t: &Transcript) -> bool {
    if t.ck.family != st.family || t.ck.len != st.pcp.proof_len {
        return false;
    }
    let Ok(q) = pcp_queries(&st.instance, &st.pcp, &t.r) else {
        return false;
    };
    if t.z.proof.indices.len() != q.len()
        || t.z.answers.len() != q.len()
        || t.z.proof.indices.iter().zip(&q).any(|(&a, &b)| a as usize != b)
    {
        return false;
    }
    let mut answers = BTreeMap::new();
    for (&i, sym) in q.iter().zip(&t.z.answers) {
        match st.decode_symbol(&t.ck, sym) {
            Some(v) => {
                answers.insert(i, v);
            }
            None => return false,
        }
    }
    pcp_decide(&st.instance, &st.pcp, &t.r, &answers) && vc_verify(&t.ck, &t.cm, &q, &t.z.answers, &t.z.proof)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Prover before the key arrives.
    AwaitingCk,
    /// Verifier after sending the key.
    KeySent,
    Committed,
    Challenged,
    Done,
    Poisoned,
}

pub struct ProverSession {
    st: Arc<Statement>,
    phase: Phase,
    pi: PcpString,
    ck: Option<CommitmentKey>,
    aux: Option<MerkleAux>,
}

impl ProverSession {
    /// Fails with `NotAWitness` before any message is exchanged.
    pub fn new(st: Arc<Statement>, w: &[u32]) -> Result<Self, ProtocolError> {
        let pi = pcp_prove(&st.instance, w)?;
        Ok(ProverSession { st, phase: Phase::AwaitingCk, pi, ck: None, aux: None })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn proof_string(&self) -> &PcpString {
        &self.pi
    }

    fn expect(&mut self, want: Phase, expected: &'static str, got: &'static str) -> Result<(), ProtocolError> {
        if self.phase == Phase::Poisoned {
            return Err(ProtocolError::Poisoned);
        }
        if self.phase != want {
            self.phase = Phase::Poisoned;
            return Err(ProtocolError::OutOfOrder { expected, got });
        }
        Ok(())
    }

    /// Second message: commit to `π` under the received key.
    pub fn prover_msg2(&mut self, ck: CommitmentKey) -> Result<Commitment, ProtocolError> {
        self.expect(Phase::AwaitingCk, "nothing before the key", "key")?;
        if ck.family != self.st.family || ck.len != self.st.pcp.proof_len {
            self.phase = Phase::Poisoned;
            return Err(ProtocolError::KeyMismatch);
        }
        let leaves = self.st.encode_proof(&ck, &self.pi);
        let (cm, aux) = vc_commit(&ck, &leaves).inspect_err(|_| self.phase = Phase::Poisoned)?;
        self.ck = Some(ck);
        self.aux = Some(aux);
        self.phase = Phase::Committed;
        Ok(cm)
    }

    /// Fourth message: open `π` on the queries of `r`.
    pub fn prover_msg4(&mut self, r: &Challenge) -> Result<Response, ProtocolError> {
        self.expect(Phase::Committed, "challenge after commitment", "challenge")?;
        self.phase = Phase::Challenged;
        let out = (|| {
            let q = pcp_queries(&self.st.instance, &self.st.pcp, r)?;
            let ck = self.ck.as_ref().expect("committed");
            let aux = self.aux.as_ref().expect("committed");
            let proof = vc_open(ck, aux, &q)?;
            let answers = q.iter().map(|&i| aux.message[i].clone()).collect();
            Ok(Response { answers, proof })
        })();
        self.phase = if out.is_ok() { Phase::Done } else { Phase::Poisoned };
        out
    }

    /// Message-driven entry point for transports.
    pub fn handle(&mut self, msg: Message) -> Result<Message, ProtocolError> {
        match msg {
            Message::Key(ck) => self.prover_msg2(ck).map(Message::Commit),
            Message::Challenge(r) => self.prover_msg4(&r).map(Message::Response),
            other => {
                let got = other.name();
                if self.phase != Phase::Poisoned {
                    self.phase = Phase::Poisoned;
                    return Err(ProtocolError::OutOfOrder { expected: "key or challenge", got });
                }
                Err(ProtocolError::Poisoned)
            }
        }
    }
}

pub struct VerifierSession {
    st: Arc<Statement>,
    phase: Phase,
    ck: CommitmentKey,
    cm: Option<Commitment>,
    r: Option<Challenge>,
    transcript: Option<Transcript>,
    verdict: Option<bool>,
}

/// First message: sample a key for vectors of length `ℓ`.
pub fn verifier_msg1<R: RngCore + ?Sized>(
    st: Arc<Statement>,
    rng: &mut R,
) -> Result<(CommitmentKey, VerifierSession), ProtocolError> {
    let ck = vc_gen(st.family, st.pcp.proof_len, rng)?;
    let s = VerifierSession {
        st,
        phase: Phase::KeySent,
        ck: ck.clone(),
        cm: None,
        r: None,
        transcript: None,
        verdict: None,
    };
    Ok((ck, s))
}

/// Second message from the prover's side, starting a fresh session.
pub fn prover_msg2(
    st: Arc<Statement>,
    w: &[u32],
    ck: CommitmentKey,
) -> Result<(Commitment, ProverSession), ProtocolError> {
    let mut s = ProverSession::new(st, w)?;
    let cm = s.prover_msg2(ck)?;
    Ok((cm, s))
}

impl VerifierSession {
    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn key(&self) -> &CommitmentKey {
        &self.ck
    }

    pub fn verdict(&self) -> Option<bool> {
        self.verdict
    }

    pub fn transcript(&self) -> Option<&Transcript> {
        self.transcript.as_ref()
    }

    fn expect(&mut self, want: Phase, expected: &'static str, got: &'static str) -> Result<(), ProtocolError> {
        if self.phase == Phase::Poisoned {
            return Err(ProtocolError::Poisoned);
        }
        if self.phase != want {
            self.phase = Phase::Poisoned;
            return Err(ProtocolError::OutOfOrder { expected, got });
        }
        Ok(())
    }

    pub fn receive_commitment(&mut self, cm: Commitment) -> Result<(), ProtocolError> {
        self.expect(Phase::KeySent, "commitment after key", "commitment")?;
        if !is_canonical(&cm.root, self.ck.family.output_bits()) {
            self.phase = Phase::Poisoned;
            return Err(ProtocolError::Malformed("root width".into()));
        }
        self.cm = Some(cm);
        self.phase = Phase::Committed;
        Ok(())
    }

    /// Third message: uniform `rc`-bit challenge.
    pub fn verifier_msg3<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<Challenge, ProtocolError> {
        self.expect(Phase::Committed, "challenge after commitment", "challenge request")?;
        let r = Challenge::random(self.st.pcp.rc, rng);
        self.r = Some(r.clone());
        self.phase = Phase::Challenged;
        Ok(r)
    }

    /// Consumes the response and records the verdict.
    pub fn receive_response(&mut self, z: Response) -> Result<bool, ProtocolError> {
        self.expect(Phase::Challenged, "response after challenge", "response")?;
        let t = Transcript {
            ck: self.ck.clone(),
            cm: self.cm.clone().expect("committed"),
            r: self.r.clone().expect("challenged"),
            z,
        };
        let ok = verify_transcript(&self.st, &t);
        self.transcript = Some(t);
        self.verdict = Some(ok);
        self.phase = Phase::Done;
        Ok(ok)
    }

    /// Message-driven entry point. A commitment is answered with a
    /// challenge; a response ends the run.
    pub fn handle<R: RngCore + ?Sized>(&mut self, msg: Message, rng: &mut R) -> Result<Option<Message>, ProtocolError> {
        match msg {
            Message::Commit(cm) => {
                self.receive_commitment(cm)?;
                self.verifier_msg3(rng).map(|r| Some(Message::Challenge(r)))
            }
            Message::Response(z) => self.receive_response(z).map(|_| None),
            other => {
                let got = other.name();
                if self.phase != Phase::Poisoned {
                    self.phase = Phase::Poisoned;
                    return Err(ProtocolError::OutOfOrder { expected: "commitment or response", got });
                }
                Err(ProtocolError::Poisoned)
            }
        }
    }
}

/// Honest run of both parties in one process. The verifier's randomness is
/// a ChaCha20 stream seeded with `seed`.
pub fn run_honest(st: Arc<Statement>, w: &[u32], seed: u64) -> Result<(bool, Transcript), ProtocolError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (ck, mut v) = verifier_msg1(st.clone(), &mut rng)?;
    let (cm, mut p) = prover_msg2(st, w, ck)?;
    v.receive_commitment(cm)?;
    let r = v.verifier_msg3(&mut rng)?;
    let z = p.prover_msg4(&r)?;
    let ok = v.receive_response(z)?;
    Ok((ok, v.transcript.take().expect("done")))
}

mod hex_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<u8>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(hex::encode))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<u8>>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.into_iter().map(|s| hex::decode(s).map_err(serde::de::Error::custom)).collect()
    }
}
