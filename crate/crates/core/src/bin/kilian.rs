//! Command-line front end for the four-message argument.

use clap::{Args, Parser, Subcommand, ValueEnum};
use pqkilian::classical_extractor::{extraction_report, Adversary};
use pqkilian::experiments::parse_seeds;
use pqkilian::hash_commitment::HashFamily;
use pqkilian::kilian_protocol::transport::{connect, serve};
use pqkilian::kilian_protocol::{run_honest, transcript_size, verify_transcript, Statement, Transcript};
use pqkilian::pcp::{clique_coloring, planted_coloring, planted_nae, CspInstance, PcpConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "kilian", version, about = "Succinct interactive argument from a PCP and a Merkle commitment")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Sha256,
    Toy,
}

#[derive(Args)]
struct StatementArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Constraints read per challenge.
    #[arg(long, default_value_t = 40)]
    pcp_k: usize,
    #[arg(long, value_enum, default_value = "sha256")]
    family: Family,
    #[arg(long, default_value_t = 128)]
    lambda: u16,
}

impl StatementArgs {
    fn load(&self) -> Result<Arc<Statement>, String> {
        let x = CspInstance::load(&self.instance).map_err(|e| e.to_string())?;
        let fam = match self.family {
            Family::Sha256 => HashFamily::sha256(self.lambda),
            Family::Toy => HashFamily::toy(self.lambda),
        };
        let cfg = PcpConfig { k: self.pcp_k, ..PcpConfig::default() };
        Statement::new(x, cfg, fam).map(Arc::new).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Coloring,
    Nae,
    Clique,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run prover and verifier in one process and write the transcript.
    Prove {
        #[command(flatten)]
        st: StatementArgs,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Binary transcript output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON debug form of the transcript.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check a binary transcript against the statement.
    Verify {
        #[command(flatten)]
        st: StatementArgs,
        #[arg(long)]
        transcript: PathBuf,
    },
    /// Act as prover for every incoming connection.
    Serve {
        #[command(flatten)]
        st: StatementArgs,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        #[arg(long)]
        max_runs: Option<usize>,
    },
    /// Act as verifier against a remote prover.
    Connect {
        #[command(flatten)]
        st: StatementArgs,
        #[arg(long)]
        peer: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the rewinding extractor against a named adversary.
    Extract {
        #[command(flatten)]
        st: StatementArgs,
        #[arg(long)]
        adversary: String,
        #[arg(long, default_value_t = 0.3)]
        epsilon: f64,
        /// Half-open seed range `a..b`.
        #[arg(long, default_value = "0..100")]
        seeds: String,
    },
    /// Write a random instance (and its planted witness, if any).
    GenInstance {
        #[arg(long, value_enum, default_value = "coloring")]
        kind: Kind,
        #[arg(long, default_value_t = 12)]
        vars: usize,
        #[arg(long, default_value_t = 24)]
        constraints: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
}

fn read_witness(path: &PathBuf) -> Result<Vec<u32>, String> {
    let s = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&s).map_err(|e| format!("witness: {e}"))
}

fn write_transcript(t: &Transcript, out: &Option<PathBuf>, json: &Option<PathBuf>) -> Result<(), String> {
    if let Some(p) = out {
        std::fs::write(p, t.to_bytes()).map_err(|e| e.to_string())?;
    }
    if let Some(p) = json {
        std::fs::write(p, t.to_json()).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn verdict(ok: bool, t: &Transcript) -> ExitCode {
    println!("{} ({} bytes)", if ok { "accept" } else { "reject" }, transcript_size(t));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cmd: Cmd) -> Result<ExitCode, String> {
    match cmd {
        Cmd::Prove { st, witness, seed, out, json } => {
            let st = st.load()?;
            let w = read_witness(&witness)?;
            let (ok, t) = run_honest(st, &w, seed).map_err(|e| e.to_string())?;
            write_transcript(&t, &out, &json)?;
            Ok(verdict(ok, &t))
        }
        Cmd::Verify { st, transcript } => {
            let st = st.load()?;
            let bytes = std::fs::read(&transcript).map_err(|e| e.to_string())?;
            let t = Transcript::from_bytes(&bytes).map_err(|e| e.to_string())?;
            Ok(verdict(verify_transcript(&st, &t), &t))
        }
        Cmd::Serve { st, witness, listen, max_runs } => {
            let st = st.load()?;
            let w = read_witness(&witness)?;
            let listener = TcpListener::bind(&listen).map_err(|e| e.to_string())?;
            eprintln!("listening on {}", listener.local_addr().map_err(|e| e.to_string())?);
            serve(listener, st, w, max_runs).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Connect { st, peer, seed, out } => {
            let st = st.load()?;
            let (ok, t) = connect(peer.as_str(), st, seed).map_err(|e| e.to_string())?;
            write_transcript(&t, &out, &None)?;
            Ok(verdict(ok, &t))
        }
        Cmd::Extract { st, adversary, epsilon, seeds } => {
            let st = st.load()?;
            let adv = Adversary::parse(&adversary).ok_or_else(|| {
                let names: Vec<&str> = Adversary::ALL.iter().map(|a| a.name()).collect();
                format!("unknown adversary `{adversary}`; one of {}", names.join(", "))
            })?;
            if !(epsilon > 0.0 && epsilon <= 1.0) {
                return Err("epsilon must lie in (0, 1]".into());
            }
            let seeds = parse_seeds(&seeds).map_err(|e| e.to_string())?;
            let report = extraction_report(&st, adv, epsilon, seeds);
            println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::GenInstance { kind, vars, constraints, seed, out, witness_out } => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let x = match kind {
                Kind::Coloring => planted_coloring(vars, constraints, &mut rng),
                Kind::Nae => planted_nae(vars, constraints, &mut rng),
                Kind::Clique => clique_coloring(vars),
            };
            std::fs::write(&out, serde_json::to_string_pretty(&x).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            if let (Some(p), Some(w)) = (witness_out, &x.planted) {
                std::fs::write(p, serde_json::to_string(w).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
