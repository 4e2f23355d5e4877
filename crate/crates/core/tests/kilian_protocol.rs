use pqkilian::hash_commitment::{HashFamily, VcError};
use pqkilian::kilian_protocol::transport::{connect, serve};
use pqkilian::kilian_protocol::*;
use pqkilian::pcp::{planted_coloring, CspInstance, PcpConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::net::TcpListener;
use std::sync::Arc;

fn setup(k: usize) -> (Arc<Statement>, Vec<u32>) {
    let x = planted_coloring(12, 24, &mut ChaCha20Rng::seed_from_u64(1));
    let w = x.planted.clone().unwrap();
    let st = Statement::new(x, PcpConfig { k, ..PcpConfig::default() }, HashFamily::sha256(128)).unwrap();
    (Arc::new(st), w)
}

#[test]
fn honest_runs_accept_and_are_reproducible() {
    let (st, w) = setup(8);
    let (ok, t) = run_honest(st.clone(), &w, 5).unwrap();
    assert!(ok);
    let (_, t2) = run_honest(st.clone(), &w, 5).unwrap();
    assert_eq!(t, t2);
    let (_, t3) = run_honest(st.clone(), &w, 6).unwrap();
    assert_ne!(t.r, t3.r);
    assert_eq!(transcript_size(&t), t.to_bytes().len());
    assert_eq!(Transcript::from_bytes(&t.to_bytes()).unwrap(), t);
    assert_eq!(Transcript::from_json(&t.to_json()).unwrap(), t);
}

#[test]
fn non_witness_fails_before_any_message() {
    let (st, _) = setup(8);
    // A constant coloring breaks every edge.
    let w = vec![0u32; 12];
    assert!(matches!(ProverSession::new(st.clone(), &w), Err(ProtocolError::Pcp(_))));
    assert!(run_honest(st, &w, 0).is_err());
}

#[test]
fn sessions_enforce_order() {
    let (st, w) = setup(8);
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let (ck, mut v) = verifier_msg1(st.clone(), &mut rng).unwrap();
    assert_eq!(v.phase(), Phase::KeySent);

    // Challenge before key poisons the prover.
    let mut p = ProverSession::new(st.clone(), &w).unwrap();
    let r = pqkilian::pcp::Challenge::random(st.pcp.rc, &mut rng);
    assert!(matches!(p.prover_msg4(&r), Err(ProtocolError::OutOfOrder { .. })));
    assert_eq!(p.phase(), Phase::Poisoned);
    assert!(matches!(p.prover_msg2(ck.clone()), Err(ProtocolError::Poisoned)));

    // Verifier cannot issue a challenge before the commitment.
    assert!(v.verifier_msg3(&mut rng).is_err());
    assert_eq!(v.phase(), Phase::Poisoned);
    assert!(v.verdict().is_none());

    // Key for the wrong length.
    let mut p = ProverSession::new(st.clone(), &w).unwrap();
    let mut short = ck.clone();
    short.len -= 1;
    assert!(matches!(p.prover_msg2(short), Err(ProtocolError::KeyMismatch)));
}

#[test]
fn handle_drives_a_full_run() {
    let (st, w) = setup(8);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let (ck, mut v) = verifier_msg1(st.clone(), &mut rng).unwrap();
    let mut p = ProverSession::new(st.clone(), &w).unwrap();
    let cm = p.handle(Message::Key(ck)).unwrap();
    let r = v.handle(cm, &mut rng).unwrap().unwrap();
    let z = p.handle(r).unwrap();
    assert!(v.handle(z, &mut rng).unwrap().is_none());
    assert_eq!(v.verdict(), Some(true));
    assert!(verify_transcript(&st, v.transcript().unwrap()));
}

#[test]
fn transcript_for_another_statement_rejects() {
    let (st, w) = setup(8);
    let (_, t) = run_honest(st.clone(), &w, 1).unwrap();
    let other = Statement::new(st.instance.clone(), PcpConfig { k: 9, ..PcpConfig::default() }, st.family).unwrap();
    assert!(!verify_transcript(&other, &t));
    let toy = Statement::new(st.instance.clone(), PcpConfig { k: 8, ..PcpConfig::default() }, HashFamily::sha256(64)).unwrap();
    assert!(!verify_transcript(&toy, &t));
}

#[test]
fn statement_rejects_bad_family() {
    let x = planted_coloring(4, 4, &mut ChaCha20Rng::seed_from_u64(1));
    let e = Statement::new(x, PcpConfig::default(), HashFamily::sha256(12)).unwrap_err();
    assert!(matches!(e, ProtocolError::Commitment(VcError::InvalidParameter(_))));
}

#[test]
fn symbols_round_trip() {
    let (st, _) = setup(8);
    let ck = pqkilian::hash_commitment::vc_gen(st.family, st.pcp.proof_len, &mut ChaCha20Rng::seed_from_u64(0)).unwrap();
    for s in [0u32, 1, 2, u32::MAX] {
        assert_eq!(st.decode_symbol(&ck, &st.encode_symbol(&ck, s)), Some(s));
    }
    let mut big = ck.zero_symbol();
    big[0] = 1;
    assert_eq!(st.decode_symbol(&ck, &big), None);
    assert_eq!(st.decode_symbol(&ck, &[0, 1]), None);
}

#[test]
fn tcp_run() {
    let (st, w) = setup(8);
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (st2, w2) = (st.clone(), w.clone());
    let server = std::thread::spawn(move || serve(listener, st2, w2, Some(2)));
    for seed in [11, 12] {
        let (ok, t) = connect(addr, st.clone(), seed).unwrap();
        assert!(ok);
        // The remote run is the same as an in-process one with that seed.
        assert_eq!(t, run_honest(st.clone(), &w, seed).unwrap().1);
    }
    server.join().unwrap().unwrap();
}

#[test]
fn transcripts_are_succinct() {
    let mut sizes = Vec::new();
    for n in [64usize, 1024, 4096] {
        let x = planted_coloring(n, 2 * n, &mut ChaCha20Rng::seed_from_u64(n as u64));
        let w = x.planted.clone().unwrap();
        let st = Arc::new(Statement::new(x, PcpConfig { k: 8, ..PcpConfig::default() }, HashFamily::sha256(128)).unwrap());
        let (ok, t) = run_honest(st.clone(), &w, 0).unwrap();
        assert!(ok);
        sizes.push((transcript_size(&t), st.full_proof_bytes()));
    }
    let (small, _) = sizes[0];
    let (big, full) = sizes[2];
    assert!(big < full / 20, "{big} vs {full}");
    // 64x longer proof, transcript grows by much less than 4x.
    assert!(big < 4 * small);
}

#[test]
fn wire_refuses_junk() {
    assert!(Transcript::from_bytes(&[]).is_err());
    assert!(Transcript::from_bytes(&[9, 0, 0, 0, 0]).is_err());
    assert!(wire::decode(0x02, &[0; 16], None).is_err());
    let huge = [0x01u8, 0xff, 0xff, 0xff, 0xff];
    assert!(wire::read_frame(&mut &huge[..]).is_err());
    let x: CspInstance = planted_coloring(4, 4, &mut ChaCha20Rng::seed_from_u64(2));
    assert!(x.validate().is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// Any single bit flip outside the challenge frame breaks the transcript.
    #[test]
    fn tampered_transcripts_reject(seed in 0u64..1000, pos in any::<usize>(), bit in 0u8..8) {
        let (st, w) = setup(6);
        let (_, t) = run_honest(st.clone(), &w, seed).unwrap();
        let mut bytes = t.to_bytes();
        let frames: Vec<usize> = t.messages().iter().map(|m| wire::frame(m).len()).collect();
        let ch_start = frames[0] + frames[1];
        let ch_end = ch_start + frames[2];
        let mut i = pos % (bytes.len() - frames[2]);
        if i >= ch_start {
            i += ch_end - ch_start;
        }
        bytes[i] ^= 1 << bit;
        if let Ok(t2) = Transcript::from_bytes(&bytes) {
            prop_assert!(!verify_transcript(&st, &t2));
        }
    }
}
