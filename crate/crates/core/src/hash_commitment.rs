//! Keyed two-to-one hash families and the Merkle-tree vector commitment.
//!
//! Bit strings are stored big-endian in `ceil(bits / 8)` bytes. When the
//! width is not a multiple of eight the unused high bits of the first byte
//! are zero, so a string reads as a big-endian integer.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Tag byte mixed into leaf hashes.
pub const LEAF_TAG: u8 = 0x00;
/// Tag byte mixed into internal-node hashes.
pub const NODE_TAG: u8 = 0x01;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("length mismatch: expected {expected} symbols, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),
    #[error("malformed encoding: {0}")]
    Malformed(String),
}

/// A keyed compressing hash `{0,1}^n -> {0,1}^{n/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HashFamily {
    /// SHA-256 over `tag || key || input`, truncated. Input is `2λ` bits.
    Sha256 { lambda: u16 },
    /// Xor-rotate-add toy over `n = λ` bits. Collisions are trivial to find,
    /// which is the point: it is small enough to hold in superposition.
    ToyXorRotate { lambda: u16 },
}

impl HashFamily {
    pub fn sha256(lambda: u16) -> Self {
        HashFamily::Sha256 { lambda }
    }

    pub fn toy(lambda: u16) -> Self {
        HashFamily::ToyXorRotate { lambda }
    }

    pub fn security_param(&self) -> usize {
        match *self {
            HashFamily::Sha256 { lambda } | HashFamily::ToyXorRotate { lambda } => lambda as usize,
        }
    }

    pub fn input_bits(&self) -> usize {
        match *self {
            HashFamily::Sha256 { lambda } => 2 * lambda as usize,
            HashFamily::ToyXorRotate { lambda } => lambda as usize,
        }
    }

    pub fn output_bits(&self) -> usize {
        self.input_bits() / 2
    }

    pub fn key_bits(&self) -> usize {
        self.input_bits()
    }

    pub fn input_bytes(&self) -> usize {
        self.input_bits().div_ceil(8)
    }

    pub fn output_bytes(&self) -> usize {
        self.output_bits().div_ceil(8)
    }

    pub fn validate(&self) -> Result<(), VcError> {
        match *self {
            HashFamily::Sha256 { lambda } => {
                if lambda == 0 || lambda % 8 != 0 || lambda > 256 {
                    return Err(VcError::InvalidParameter(format!(
                        "sha256 family needs λ a positive multiple of 8 up to 256, got {lambda}"
                    )));
                }
            }
            HashFamily::ToyXorRotate { lambda } => {
                if !(8..=64).contains(&lambda) || lambda % 2 != 0 {
                    return Err(VcError::InvalidParameter(format!(
                        "toy family needs an even λ in 8..=64, got {lambda}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Evaluates the hash. `key` has `key_bits` bits and `input` has
    /// `input_bits` bits, both in the canonical byte layout.
    pub fn eval(&self, key: &[u8], tag: u8, input: &[u8]) -> Vec<u8> {
        match *self {
            HashFamily::Sha256 { .. } => {
                let mut h = Sha256::new();
                h.update([tag]);
                h.update(key);
                h.update(input);
                let d = h.finalize();
                d[..self.output_bytes()].to_vec()
            }
            HashFamily::ToyXorRotate { .. } => {
                let x = bits_to_u64(input);
                let k = bits_to_u64(key);
                u64_to_bits(self.toy_eval_u64(k, tag, x), self.output_bits())
            }
        }
    }

    fn toy_halves(&self, v: u64) -> (u64, u64) {
        let w = self.output_bits();
        (v >> w, v & low_mask(w))
    }

    fn toy_eval_u64(&self, key: u64, tag: u8, x: u64) -> u64 {
        let w = self.output_bits();
        let mask = low_mask(w);
        let (hi, lo) = self.toy_halves(x);
        let (k1, k2) = self.toy_halves(key);
        let mixed = rotl(hi ^ k1, 3 % w as u32, w).wrapping_add(lo) & mask;
        mixed ^ k2 ^ toy_tag_constant(tag, w)
    }

    /// Returns a second preimage of `x` under the toy family: the same
    /// output, different input. `None` for the cryptographic family.
    pub fn toy_collision(&self, key: &[u8], tag: u8, x: &[u8]) -> Option<Vec<u8>> {
        if !matches!(self, HashFamily::ToyXorRotate { .. }) {
            return None;
        }
        let w = self.output_bits();
        let mask = low_mask(w);
        let xv = bits_to_u64(x);
        let k = bits_to_u64(key);
        let (hi, _) = self.toy_halves(xv);
        let (k1, _) = self.toy_halves(k);
        let target = self.toy_eval_u64(k, tag, xv);
        let hi2 = (hi ^ 1) & mask;
        // out = (rotl(hi ^ k1) + lo) ^ k2 ^ c is a bijection in lo.
        let want_sum = target ^ self.toy_halves(k).1 ^ toy_tag_constant(tag, w);
        let lo2 = want_sum.wrapping_sub(rotl(hi2 ^ k1, 3 % w as u32, w)) & mask;
        let x2 = (hi2 << w) | lo2;
        debug_assert_eq!(self.toy_eval_u64(k, tag, x2), target);
        Some(u64_to_bits(x2, self.input_bits()))
    }
}

fn low_mask(w: usize) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

fn rotl(v: u64, r: u32, w: usize) -> u64 {
    let mask = low_mask(w);
    let v = v & mask;
    if r == 0 {
        return v;
    }
    ((v << r) | (v >> (w as u32 - r))) & mask
}

fn toy_tag_constant(tag: u8, w: usize) -> u64 {
    if tag == LEAF_TAG {
        0
    } else {
        0x9E37_79B9_7F4A_7C15u64.rotate_left(tag as u32) & low_mask(w)
    }
}

/// Reads a canonical bit string of at most 64 bits as an integer.
pub fn bits_to_u64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64)
}

/// Writes `v` as a canonical bit string of `bits` bits.
pub fn u64_to_bits(v: u64, bits: usize) -> Vec<u8> {
    let nbytes = bits.div_ceil(8);
    let v = v & low_mask(bits);
    (0..nbytes).rev().map(|i| if i < 8 { (v >> (8 * i)) as u8 } else { 0 }).collect()
}

/// True when `bytes` is a well-formed string of exactly `bits` bits.
pub fn is_canonical(bytes: &[u8], bits: usize) -> bool {
    if bytes.len() != bits.div_ceil(8) {
        return false;
    }
    let spare = bytes.len() * 8 - bits;
    spare == 0 || bytes.first().is_none_or(|b| b >> (8 - spare) == 0)
}

/// Commitment key `(ℓ, h)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentKey {
    pub len: usize,
    pub family: HashFamily,
    #[serde(with = "hex_bytes")]
    pub hash_key: Vec<u8>,
}

impl CommitmentKey {
    /// Bits per leaf symbol.
    pub fn alphabet_width(&self) -> usize {
        self.family.input_bits()
    }

    pub fn symbol_bytes(&self) -> usize {
        self.family.input_bytes()
    }

    pub fn digest_bytes(&self) -> usize {
        self.family.output_bytes()
    }

    /// Tree height `ceil(log2 ℓ)`.
    pub fn height(&self) -> usize {
        ceil_log2(self.len)
    }

    pub fn symbol(&self, value: u64) -> Vec<u8> {
        u64_to_bits(value, self.alphabet_width())
    }

    pub fn zero_symbol(&self) -> Vec<u8> {
        vec![0u8; self.symbol_bytes()]
    }

    pub fn random_symbol<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        random_bits(rng, self.alphabet_width())
    }

    fn leaf(&self, sym: &[u8]) -> Vec<u8> {
        self.family.eval(&self.hash_key, LEAF_TAG, sym)
    }

    fn node(&self, left: &[u8], right: &[u8]) -> Vec<u8> {
        // Two n/2-bit digests make one n-bit input.
        let w = self.family.output_bits();
        let input = if w.is_multiple_of(8) {
            [left, right].concat()
        } else {
            let v = (bits_to_u64(left) << w) | bits_to_u64(right);
            u64_to_bits(v, 2 * w)
        };
        self.family.eval(&self.hash_key, NODE_TAG, &input)
    }
}

pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// First `bits` bits of the RNG byte stream.
pub fn random_bits<R: RngCore + ?Sized>(rng: &mut R, bits: usize) -> Vec<u8> {
    let mut buf = vec![0u8; bits.div_ceil(8)];
    rng.fill_bytes(&mut buf);
    let spare = buf.len() * 8 - bits;
    if spare > 0 {
        // Keep the stream's leading bits and right-align them.
        let v = bits_from_stream(&buf, bits);
        return v;
    }
    buf
}

fn bits_from_stream(buf: &[u8], bits: usize) -> Vec<u8> {
    let nbytes = buf.len();
    let spare = nbytes * 8 - bits;
    let mut out = vec![0u8; nbytes];
    // Shift the whole big-endian buffer right by `spare` bits.
    let mut carry = 0u8;
    for (i, &b) in buf.iter().enumerate() {
        out[i] = (b >> spare) | carry;
        carry = b << (8 - spare);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Commitment {
    #[serde(with = "hex_bytes")]
    pub root: Vec<u8>,
}

impl Commitment {
    pub fn to_bytes(&self) -> Vec<u8> {
        self.root.clone()
    }

    pub fn from_bytes(ck: &CommitmentKey, bytes: &[u8]) -> Result<Self, VcError> {
        if !is_canonical(bytes, ck.family.output_bits()) {
            return Err(VcError::Malformed("root width".into()));
        }
        Ok(Commitment { root: bytes.to_vec() })
    }
}

/// Message plus every tree level. `levels[0]` holds the leaf digests and
/// `levels[height]` holds the root alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleAux {
    pub message: Vec<Vec<u8>>,
    pub levels: Vec<Vec<Vec<u8>>>,
}

impl MerkleAux {
    pub fn root(&self) -> &[u8] {
        &self.levels.last().expect("tree has a root")[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofNode {
    pub level: u8,
    pub position: u32,
    #[serde(with = "hex_bytes")]
    pub hash: Vec<u8>,
}

/// Authentication paths for the opened set, with every node that can be
/// recomputed from opened leaves left out. Nodes are sorted by
/// `(level, position)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpeningProof {
    pub len: u32,
    pub indices: Vec<u32>,
    pub nodes: Vec<ProofNode>,
}

/// Coordinates of the nodes an opening of `indices` must carry.
fn required_nodes(height: usize, indices: &[usize]) -> Vec<(u8, u32)> {
    let mut known: BTreeSet<usize> = indices.iter().copied().collect();
    let mut out = Vec::new();
    for level in 0..height {
        for &p in &known {
            let s = p ^ 1;
            if !known.contains(&s) {
                out.push((level as u8, s as u32));
            }
        }
        known = known.iter().map(|p| p >> 1).collect();
    }
    out
}

fn normalize_query(ck: &CommitmentKey, q: &[usize]) -> Result<Vec<usize>, VcError> {
    if q.is_empty() {
        return Err(VcError::InvalidQuery("empty index set".into()));
    }
    let set: BTreeSet<usize> = q.iter().copied().collect();
    if let Some(&bad) = set.iter().find(|&&i| i >= ck.len) {
        return Err(VcError::InvalidQuery(format!("index {bad} outside 0..{}", ck.len)));
    }
    Ok(set.into_iter().collect())
}

/// Samples a commitment key for vectors of length `len`.
pub fn vc_gen<R: RngCore + ?Sized>(
    family: HashFamily,
    len: usize,
    rng: &mut R,
) -> Result<CommitmentKey, VcError> {
    family.validate()?;
    if len == 0 {
        return Err(VcError::InvalidParameter("ℓ must be at least 1".into()));
    }
    if len > u32::MAX as usize {
        return Err(VcError::InvalidParameter("ℓ exceeds 32 bits".into()));
    }
    let hash_key = random_bits(rng, family.key_bits());
    Ok(CommitmentKey { len, family, hash_key })
}

pub fn vc_commit(ck: &CommitmentKey, m: &[Vec<u8>]) -> Result<(Commitment, MerkleAux), VcError> {
    if m.len() != ck.len {
        return Err(VcError::LengthMismatch { expected: ck.len, got: m.len() });
    }
    let width = ck.alphabet_width();
    for (i, s) in m.iter().enumerate() {
        if !is_canonical(s, width) {
            return Err(VcError::InvalidSymbol(format!("symbol {i} is not {width} bits")));
        }
    }
    let height = ck.height();
    let padded = 1usize << height;
    let zero = ck.zero_symbol();
    let mut level: Vec<Vec<u8>> = (0..padded)
        .map(|i| ck.leaf(m.get(i).unwrap_or(&zero)))
        .collect();
    let mut levels = Vec::with_capacity(height + 1);
    for _ in 0..height {
        let next = level.chunks(2).map(|c| ck.node(&c[0], &c[1])).collect();
        levels.push(std::mem::replace(&mut level, next));
    }
    levels.push(level);
    let cm = Commitment { root: levels[height][0].clone() };
    Ok((cm, MerkleAux { message: m.to_vec(), levels }))
}

pub fn vc_open(ck: &CommitmentKey, aux: &MerkleAux, q: &[usize]) -> Result<OpeningProof, VcError> {
    let q = normalize_query(ck, q)?;
    if aux.message.len() != ck.len || aux.levels.len() != ck.height() + 1 {
        return Err(VcError::LengthMismatch { expected: ck.len, got: aux.message.len() });
    }
    let nodes = required_nodes(ck.height(), &q)
        .into_iter()
        .map(|(level, position)| ProofNode {
            level,
            position,
            hash: aux.levels[level as usize][position as usize].clone(),
        })
        .collect();
    Ok(OpeningProof {
        len: ck.len as u32,
        indices: q.iter().map(|&i| i as u32).collect(),
        nodes,
    })
}

/// Checks an opening. Total: anything malformed yields `false`.
pub fn vc_verify(
    ck: &CommitmentKey,
    cm: &Commitment,
    q: &[usize],
    v: &[Vec<u8>],
    pf: &OpeningProof,
) -> bool {
    if q.len() != v.len() || ck.family.validate().is_err() {
        return false;
    }
    if !is_canonical(&cm.root, ck.family.output_bits()) {
        return false;
    }
    let mut pairs: Vec<(usize, &Vec<u8>)> = q.iter().copied().zip(v.iter()).collect();
    pairs.sort_by_key(|p| p.0);
    if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
        return false;
    }
    let sorted: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let values: Vec<Vec<u8>> = pairs.iter().map(|p| p.1.clone()).collect();
    match reconstruct(ck, &sorted, &values, pf) {
        Some(levels) => levels[ck.height()].get(&0).is_some_and(|r| *r == cm.root),
        None => false,
    }
}

/// Recomputes every node reachable from the opened leaves and the proof.
/// Returns per-level maps `position -> digest`, or `None` if the proof does
/// not have exactly the expected shape.
fn reconstruct(
    ck: &CommitmentKey,
    indices: &[usize],
    values: &[Vec<u8>],
    pf: &OpeningProof,
) -> Option<Vec<BTreeMap<usize, Vec<u8>>>> {
    if pf.len as usize != ck.len || indices.is_empty() {
        return None;
    }
    if pf.indices.len() != indices.len()
        || pf.indices.iter().zip(indices).any(|(&a, &b)| a as usize != b)
    {
        return None;
    }
    if indices.iter().any(|&i| i >= ck.len) || indices.windows(2).any(|w| w[0] >= w[1]) {
        return None;
    }
    let width = ck.alphabet_width();
    if values.iter().any(|s| !is_canonical(s, width)) {
        return None;
    }
    let height = ck.height();
    let need = required_nodes(height, indices);
    if need.len() != pf.nodes.len() {
        return None;
    }
    let out_bits = ck.family.output_bits();
    let mut given: Vec<BTreeMap<usize, Vec<u8>>> = vec![BTreeMap::new(); height + 1];
    for (&(level, pos), node) in need.iter().zip(&pf.nodes) {
        if node.level != level || node.position != pos || !is_canonical(&node.hash, out_bits) {
            return None;
        }
        given[level as usize].insert(pos as usize, node.hash.clone());
    }
    let mut levels: Vec<BTreeMap<usize, Vec<u8>>> = Vec::with_capacity(height + 1);
    let mut cur: BTreeMap<usize, Vec<u8>> =
        indices.iter().zip(values).map(|(&i, s)| (i, ck.leaf(s))).collect();
    for level in 0..height {
        let mut full = cur.clone();
        full.extend(given[level].iter().map(|(k, v)| (*k, v.clone())));
        let parents: BTreeSet<usize> = cur.keys().map(|p| p >> 1).collect();
        let mut next = BTreeMap::new();
        for par in parents {
            let l = full.get(&(2 * par))?;
            let r = full.get(&(2 * par + 1))?;
            next.insert(par, ck.node(l, r));
        }
        levels.push(full);
        cur = next;
    }
    levels.push(cur);
    Some(levels)
}

impl OpeningProof {
    /// Expands the proof into one full authentication path (`height` sibling
    /// digests, leaf level first) per opened index. Needs the opened values
    /// because siblings that are themselves opened are not stored.
    pub fn full_paths(&self, ck: &CommitmentKey, values: &[Vec<u8>]) -> Option<Vec<Vec<Vec<u8>>>> {
        let indices: Vec<usize> = self.indices.iter().map(|&i| i as usize).collect();
        if indices.len() != values.len() {
            return None;
        }
        let levels = reconstruct(ck, &indices, values, self)?;
        let height = ck.height();
        indices
            .iter()
            .map(|&i| {
                (0..height)
                    .map(|l| levels[l].get(&((i >> l) ^ 1)).cloned())
                    .collect::<Option<Vec<_>>>()
            })
            .collect()
    }

    pub fn header_bytes(&self) -> usize {
        8 + 4 * self.indices.len()
    }

    /// Header (`ℓ`, `|Q|`, indices; all u32 big-endian) then
    /// `(level: u8, position: u32 BE, hash)` triples.
    pub fn to_bytes(&self) -> Vec<u8> {
        let hlen = self.nodes.first().map_or(0, |n| n.hash.len());
        let mut out = Vec::with_capacity(self.header_bytes() + self.nodes.len() * (5 + hlen));
        out.extend_from_slice(&self.len.to_be_bytes());
        out.extend_from_slice(&(self.indices.len() as u32).to_be_bytes());
        for i in &self.indices {
            out.extend_from_slice(&i.to_be_bytes());
        }
        for n in &self.nodes {
            out.push(n.level);
            out.extend_from_slice(&n.position.to_be_bytes());
            out.extend_from_slice(&n.hash);
        }
        out
    }

    pub fn from_bytes(ck: &CommitmentKey, bytes: &[u8]) -> Result<Self, VcError> {
        let bad = |m: &str| VcError::Malformed(m.to_string());
        let read_u32 = |at: usize| -> Result<u32, VcError> {
            bytes
                .get(at..at + 4)
                .map(|s| u32::from_be_bytes([s[0], s[1], s[2], s[3]]))
                .ok_or_else(|| bad("truncated header"))
        };
        let len = read_u32(0)?;
        let count = read_u32(4)? as usize;
        let body = 8usize
            .checked_add(count.checked_mul(4).ok_or_else(|| bad("index count"))?)
            .ok_or_else(|| bad("index count"))?;
        if body > bytes.len() {
            return Err(bad("truncated index list"));
        }
        let indices = (0..count).map(|j| read_u32(8 + 4 * j)).collect::<Result<Vec<_>, _>>()?;
        let hlen = ck.digest_bytes();
        let rest = &bytes[body..];
        if !rest.len().is_multiple_of(5 + hlen) {
            return Err(bad("node list length"));
        }
        let nodes = rest
            .chunks(5 + hlen)
            .map(|c| ProofNode {
                level: c[0],
                position: u32::from_be_bytes([c[1], c[2], c[3], c[4]]),
                hash: c[5..].to_vec(),
            })
            .collect();
        Ok(OpeningProof { len, indices, nodes })
    }
}

/// Serde adapter writing byte vectors as hex strings.
pub mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}
