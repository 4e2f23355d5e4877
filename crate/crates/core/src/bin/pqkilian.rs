//! Scenario runner.

use clap::{Parser, Subcommand};
use pqkilian::experiments::{parse_seeds, run_scenario, scenarios, ScenarioConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pqkilian", version, about = "Run the seeded reproduction scenarios")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write raw.jsonl and summary.json to --out.
    Run {
        scenario: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Half-open seed range `a..b`.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List scenarios with their default parameters.
    List,
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::List => {
            for s in scenarios() {
                println!("{:<12} {}", s.name, s.about);
                println!("{:<12} seeds {}..{} params {}", "", s.default_seeds.0, s.default_seeds.1, s.defaults());
            }
            ExitCode::SUCCESS
        }
        Cmd::Run { scenario, config, out, seeds, jobs } => {
            let result = (|| {
                let cfg = match config {
                    Some(p) => ScenarioConfig::load(&p)?,
                    None => ScenarioConfig::default(),
                };
                let seeds = seeds.as_deref().map(parse_seeds).transpose()?;
                let report = run_scenario(&scenario, &cfg, seeds, jobs)?;
                report.write(&out)?;
                Ok::<_, pqkilian::experiments::ExpError>(report)
            })();
            match result {
                Ok(report) => {
                    for c in &report.checks {
                        println!(
                            "{} {:<28} statistic {:.6e} bound {:.6e} sigma {:.3e} n {}",
                            if c.pass { "PASS" } else { "FAIL" },
                            c.name,
                            c.statistic,
                            c.bound,
                            c.sigma,
                            c.samples
                        );
                    }
                    println!("{} in {:.2}s", if report.pass { "all bounds hold" } else { "bounds violated" }, report.wall_clock_s);
                    if report.pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
