use pqkilian::hash_commitment::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

fn key(len: usize, lambda: u16, seed: u64) -> CommitmentKey {
    vc_gen(HashFamily::sha256(lambda), len, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap()
}

/// Straight-line SHA-256 tree for four leaves, written without the library.
fn oracle_root4(hk: &[u8], m: &[Vec<u8>; 4], out: usize) -> Vec<u8> {
    let h = |tag: u8, input: &[u8]| {
        let mut s = Sha256::new();
        s.update([tag]);
        s.update(hk);
        s.update(input);
        s.finalize()[..out].to_vec()
    };
    let l: Vec<Vec<u8>> = m.iter().map(|x| h(0, x)).collect();
    let a = h(1, &[l[0].clone(), l[1].clone()].concat());
    let b = h(1, &[l[2].clone(), l[3].clone()].concat());
    h(1, &[a, b].concat())
}

#[test]
fn four_leaf_root_matches_oracle() {
    let ck = key(4, 128, 9);
    let m: [Vec<u8>; 4] = [ck.symbol(0), ck.symbol(1), ck.symbol(0xdead), ck.symbol(u64::MAX)];
    let (cm, _) = vc_commit(&ck, &m).unwrap();
    assert_eq!(cm.root, oracle_root4(&ck.hash_key, &m, 16));
    assert_eq!(ck.hash_key.len(), 32);
}

#[test]
fn three_leaves_pad_to_four() {
    let ck = key(3, 64, 2);
    let m = vec![ck.symbol(5), ck.symbol(6), ck.symbol(7)];
    let (cm, _) = vc_commit(&ck, &m).unwrap();
    let padded = [m[0].clone(), m[1].clone(), m[2].clone(), ck.zero_symbol()];
    assert_eq!(cm.root, oracle_root4(&ck.hash_key, &padded, 8));
}

#[test]
fn wide_symbols_keep_low_word() {
    // 256-bit symbols: the value sits in the last eight bytes.
    let b = u64_to_bits(0x0102_0304_0506_0708, 256);
    assert_eq!(b.len(), 32);
    assert!(b[..24].iter().all(|&x| x == 0));
    assert_eq!(&b[24..], &[1, 2, 3, 4, 5, 6, 7, 8]);
    assert_eq!(bits_to_u64(&b[24..]), 0x0102_0304_0506_0708);
    assert!(is_canonical(&b, 256));
}

#[test]
fn odd_widths_are_right_aligned() {
    assert_eq!(u64_to_bits(0x1ff, 9), vec![1, 0xff]);
    assert_eq!(u64_to_bits(0xfff, 9), vec![1, 0xff]);
    assert!(is_canonical(&[1, 0xff], 9));
    assert!(!is_canonical(&[2, 0], 9));
    assert!(!is_canonical(&[0], 9));
}

#[test]
fn opening_everything_needs_no_siblings() {
    let ck = key(8, 128, 3);
    let m: Vec<Vec<u8>> = (0..8).map(|i| ck.symbol(i)).collect();
    let (cm, aux) = vc_commit(&ck, &m).unwrap();
    let q: Vec<usize> = (0..8).collect();
    let pf = vc_open(&ck, &aux, &q).unwrap();
    assert!(pf.nodes.is_empty());
    assert!(vc_verify(&ck, &cm, &q, &m, &pf));
}

#[test]
fn proof_for_one_leaf_has_height_nodes() {
    let ck = key(1000, 128, 3);
    let m: Vec<Vec<u8>> = (0..1000).map(|i| ck.symbol(i)).collect();
    let (cm, aux) = vc_commit(&ck, &m).unwrap();
    let pf = vc_open(&ck, &aux, &[999]).unwrap();
    assert_eq!(pf.nodes.len(), 10);
    assert!(vc_verify(&ck, &cm, &[999], &[m[999].clone()], &pf));
    assert!(!vc_verify(&ck, &cm, &[998], &[m[999].clone()], &pf));
}

#[test]
fn toy_family_commits_and_collides() {
    let fam = HashFamily::toy(16);
    let ck = vc_gen(fam, 4, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
    let m: Vec<Vec<u8>> = (0..4).map(|i| ck.symbol(i * 1000)).collect();
    let (cm, aux) = vc_commit(&ck, &m).unwrap();
    let pf = vc_open(&ck, &aux, &[1, 3]).unwrap();
    assert!(vc_verify(&ck, &cm, &[1, 3], &[m[1].clone(), m[3].clone()], &pf));
    // A second preimage of leaf 0 opens position 0 to a different value.
    let alt = fam.toy_collision(&ck.hash_key, LEAF_TAG, &m[0]).unwrap();
    assert_ne!(alt, m[0]);
    let mut m2 = m.clone();
    m2[0] = alt.clone();
    let (cm2, aux2) = vc_commit(&ck, &m2).unwrap();
    assert_eq!(cm, cm2);
    let pf2 = vc_open(&ck, &aux2, &[0]).unwrap();
    assert!(vc_verify(&ck, &cm, &[0], &[alt], &pf2));
}

fn instance() -> impl Strategy<Value = (u64, usize, Vec<usize>)> {
    (any::<u64>(), 1usize..200).prop_flat_map(|(seed, len)| {
        (Just(seed), Just(len), proptest::collection::vec(0..len, 1..12))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn honest_openings_verify((seed, len, q) in instance()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let ck = vc_gen(HashFamily::sha256(128), len, &mut rng).unwrap();
        let m: Vec<Vec<u8>> = (0..len).map(|_| ck.random_symbol(&mut rng)).collect();
        let (cm, aux) = vc_commit(&ck, &m).unwrap();
        let pf = vc_open(&ck, &aux, &q).unwrap();
        let mut qs = q.clone();
        qs.sort();
        qs.dedup();
        let v: Vec<Vec<u8>> = qs.iter().map(|&i| m[i].clone()).collect();
        prop_assert!(vc_verify(&ck, &cm, &qs, &v, &pf));
        // Order of (q, v) pairs does not matter.
        let rq: Vec<usize> = qs.iter().rev().copied().collect();
        let rv: Vec<Vec<u8>> = v.iter().rev().cloned().collect();
        prop_assert!(vc_verify(&ck, &cm, &rq, &rv, &pf));
        // Bytes round trip.
        let back = OpeningProof::from_bytes(&ck, &pf.to_bytes()).unwrap();
        prop_assert_eq!(&back, &pf);
    }

    #[test]
    fn single_bit_flips_are_rejected((seed, len, q) in instance(), which in 0usize..3, pos in any::<usize>(), bit in 0u8..8) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let ck = vc_gen(HashFamily::sha256(128), len, &mut rng).unwrap();
        let m: Vec<Vec<u8>> = (0..len).map(|_| ck.random_symbol(&mut rng)).collect();
        let (mut cm, aux) = vc_commit(&ck, &m).unwrap();
        let mut qs = q.clone();
        qs.sort();
        qs.dedup();
        let mut v: Vec<Vec<u8>> = qs.iter().map(|&i| m[i].clone()).collect();
        let mut pfb = vc_open(&ck, &aux, &qs).unwrap().to_bytes();
        match which {
            0 => { let n = cm.root.len(); cm.root[pos % n] ^= 1 << bit; }
            1 => { let j = pos % v.len(); let n = v[j].len(); v[j][(pos / 7) % n] ^= 1 << bit; }
            _ => { let n = pfb.len(); pfb[pos % n] ^= 1 << bit; }
        }
        let ok = match OpeningProof::from_bytes(&ck, &pfb) {
            Ok(pf) => vc_verify(&ck, &cm, &qs, &v, &pf),
            Err(_) => false,
        };
        prop_assert!(!ok);
    }

    #[test]
    fn bits_round_trip(v in any::<u64>(), bits in 1usize..=64) {
        let b = u64_to_bits(v, bits);
        prop_assert!(is_canonical(&b, bits));
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        prop_assert_eq!(bits_to_u64(&b), v & mask);
    }
}
