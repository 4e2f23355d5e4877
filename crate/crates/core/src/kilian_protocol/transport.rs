//! One protocol run per TCP connection.

use super::wire::{self, read_frame, write_message};
use super::{verifier_msg1, Message, ProtocolError, ProverSession, Statement, Transcript};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread;

/// Runs the prover side on an accepted connection.
pub fn prove_on(stream: &mut TcpStream, st: Arc<Statement>, w: &[u32]) -> Result<(), ProtocolError> {
    let mut session = ProverSession::new(st, w)?;
    let mut ck = None;
    for _ in 0..2 {
        let (tag, payload) = read_frame(stream)?;
        let msg = wire::decode(tag, &payload, ck.as_ref())?;
        if let Message::Key(k) = &msg {
            ck = Some(k.clone());
        }
        let reply = session.handle(msg)?;
        write_message(stream, &reply)?;
    }
    Ok(())
}

/// Accepts connections and serves each on its own thread. Stops after
/// `max_runs` connections when given.
pub fn serve(
    listener: TcpListener,
    st: Arc<Statement>,
    w: Vec<u32>,
    max_runs: Option<usize>,
) -> Result<(), ProtocolError> {
    let w = Arc::new(w);
    let mut handles = Vec::new();
    for (n, conn) in listener.incoming().enumerate() {
        let mut stream = conn?;
        let (st, w) = (st.clone(), w.clone());
        handles.push(thread::spawn(move || {
            let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
            if let Err(e) = prove_on(&mut stream, st, &w) {
                eprintln!("run with {peer} failed: {e}");
            }
        }));
        if max_runs.is_some_and(|m| n + 1 >= m) {
            break;
        }
    }
    for h in handles {
        let _ = h.join();
    }
    Ok(())
}

/// Connects to a prover and runs the verifier side.
pub fn connect<A: ToSocketAddrs>(addr: A, st: Arc<Statement>, seed: u64) -> Result<(bool, Transcript), ProtocolError> {
    let mut stream = TcpStream::connect(addr)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (ck, mut v) = verifier_msg1(st, &mut rng)?;
    write_message(&mut stream, &Message::Key(ck.clone()))?;
    loop {
        let (tag, payload) = read_frame(&mut stream)?;
        let msg = wire::decode(tag, &payload, Some(&ck))?;
        match v.handle(msg, &mut rng)? {
            Some(reply) => write_message(&mut stream, &reply)?,
            None => break,
        }
    }
    let ok = v.verdict().unwrap_or(false);
    let t = v.transcript().cloned().ok_or(ProtocolError::Malformed("run ended early".into()))?;
    Ok((ok, t))
}
