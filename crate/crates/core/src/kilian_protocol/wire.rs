//! Frame format: one tag byte (`0x01..=0x04`), a big-endian `u32` payload
//! length, then the payload.
//!
//! Payloads:
//! * `0x01` key: `ℓ: u32`, family tag `u8` (1 = sha256, 2 = toy), `λ: u16`, key bytes.
//! * `0x02` commitment: root bytes.
//! * `0x03` challenge: bit length `u32`, packed bits.
//! * `0x04` response: `|Q|: u32`, `|Q|` symbols, then the opening proof.

use super::{Message, ProtocolError, Response};
use crate::hash_commitment::{is_canonical, Commitment, CommitmentKey, HashFamily, OpeningProof};
use crate::pcp::Challenge;
use std::io::{Read, Write};

pub const TAG_KEY: u8 = 0x01;
pub const TAG_COMMIT: u8 = 0x02;
pub const TAG_CHALLENGE: u8 = 0x03;
pub const TAG_RESPONSE: u8 = 0x04;

/// Frames above this size are refused before allocation.
pub const MAX_FRAME: usize = 64 << 20;

fn malformed(m: &str) -> ProtocolError {
    ProtocolError::Malformed(m.to_string())
}

pub fn encode_key(ck: &CommitmentKey) -> Vec<u8> {
    let (tag, lambda) = match ck.family {
        HashFamily::Sha256 { lambda } => (1u8, lambda),
        HashFamily::ToyXorRotate { lambda } => (2u8, lambda),
    };
    let mut out = Vec::with_capacity(7 + ck.hash_key.len());
    out.extend_from_slice(&(ck.len as u32).to_be_bytes());
    out.push(tag);
    out.extend_from_slice(&lambda.to_be_bytes());
    out.extend_from_slice(&ck.hash_key);
    out
}

pub fn decode_key(p: &[u8]) -> Result<CommitmentKey, ProtocolError> {
    if p.len() < 7 {
        return Err(malformed("short key"));
    }
    let len = u32::from_be_bytes([p[0], p[1], p[2], p[3]]) as usize;
    let lambda = u16::from_be_bytes([p[5], p[6]]);
    let family = match p[4] {
        1 => HashFamily::Sha256 { lambda },
        2 => HashFamily::ToyXorRotate { lambda },
        _ => return Err(malformed("unknown hash family")),
    };
    family.validate().map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    let key = &p[7..];
    if len == 0 || !is_canonical(key, family.key_bits()) {
        return Err(malformed("key width"));
    }
    Ok(CommitmentKey { len, family, hash_key: key.to_vec() })
}

pub fn encode_challenge(r: &Challenge) -> Vec<u8> {
    let mut out = (r.bits as u32).to_be_bytes().to_vec();
    out.extend_from_slice(&r.bytes);
    out
}

pub fn decode_challenge(p: &[u8]) -> Result<Challenge, ProtocolError> {
    if p.len() < 4 {
        return Err(malformed("short challenge"));
    }
    let bits = u32::from_be_bytes([p[0], p[1], p[2], p[3]]) as usize;
    let r = Challenge { bits, bytes: p[4..].to_vec() };
    if !r.is_canonical() {
        return Err(malformed("challenge width"));
    }
    Ok(r)
}

pub fn encode_response(z: &Response) -> Vec<u8> {
    let mut out = (z.answers.len() as u32).to_be_bytes().to_vec();
    for a in &z.answers {
        out.extend_from_slice(a);
    }
    out.extend_from_slice(&z.proof.to_bytes());
    out
}

pub fn decode_response(ck: &CommitmentKey, p: &[u8]) -> Result<Response, ProtocolError> {
    if p.len() < 4 {
        return Err(malformed("short response"));
    }
    let count = u32::from_be_bytes([p[0], p[1], p[2], p[3]]) as usize;
    let sb = ck.symbol_bytes();
    let end = count
        .checked_mul(sb)
        .and_then(|n| n.checked_add(4))
        .filter(|&e| e <= p.len())
        .ok_or_else(|| malformed("answer list"))?;
    let answers = p[4..end].chunks(sb).map(|c| c.to_vec()).collect();
    let proof = OpeningProof::from_bytes(ck, &p[end..]).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    Ok(Response { answers, proof })
}

/// Payload of a message. Commitments and responses need the key for their widths.
pub fn encode(msg: &Message) -> (u8, Vec<u8>) {
    match msg {
        Message::Key(ck) => (TAG_KEY, encode_key(ck)),
        Message::Commit(cm) => (TAG_COMMIT, cm.to_bytes()),
        Message::Challenge(r) => (TAG_CHALLENGE, encode_challenge(r)),
        Message::Response(z) => (TAG_RESPONSE, encode_response(z)),
    }
}

pub fn decode(tag: u8, payload: &[u8], ck: Option<&CommitmentKey>) -> Result<Message, ProtocolError> {
    let need_ck = || ck.ok_or(ProtocolError::OutOfOrder { expected: "key", got: "dependent message" });
    match tag {
        TAG_KEY => Ok(Message::Key(decode_key(payload)?)),
        TAG_COMMIT => Ok(Message::Commit(
            Commitment::from_bytes(need_ck()?, payload).map_err(|e| ProtocolError::Malformed(e.to_string()))?,
        )),
        TAG_CHALLENGE => Ok(Message::Challenge(decode_challenge(payload)?)),
        TAG_RESPONSE => Ok(Message::Response(decode_response(need_ck()?, payload)?)),
        t => Err(ProtocolError::Malformed(format!("unknown tag {t:#04x}"))),
    }
}

pub fn frame(msg: &Message) -> Vec<u8> {
    let (tag, payload) = encode(msg);
    let mut out = Vec::with_capacity(5 + payload.len());
    out.push(tag);
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&payload);
    out
}

pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> Result<(), ProtocolError> {
    w.write_all(&frame(msg))?;
    w.flush()?;
    Ok(())
}

pub fn read_frame<R: Read>(r: &mut R) -> Result<(u8, Vec<u8>), ProtocolError> {
    let mut head = [0u8; 5];
    r.read_exact(&mut head)?;
    let len = u32::from_be_bytes([head[1], head[2], head[3], head[4]]) as usize;
    if len > MAX_FRAME {
        return Err(malformed("frame too large"));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok((head[0], payload))
}

/// Splits a byte string into frames; fails on trailing garbage.
pub fn split_frames(mut bytes: &[u8]) -> Result<Vec<(u8, &[u8])>, ProtocolError> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        if bytes.len() < 5 {
            return Err(malformed("truncated frame header"));
        }
        let len = u32::from_be_bytes([bytes[1], bytes[2], bytes[3], bytes[4]]) as usize;
        let end = 5usize.checked_add(len).ok_or_else(|| malformed("frame length"))?;
        let body = bytes.get(5..end).ok_or_else(|| malformed("truncated frame"))?;
        out.push((bytes[0], body));
        bytes = &bytes[end..];
    }
    Ok(out)
}
