//! Scenario runner: configured, seeded Monte-Carlo reproductions with
//! JSON reports.
//!
//! A scenario turns a parameter map and a seed range into raw per-seed
//! records, then derives its checks from those records alone, so a report
//! can be re-checked offline with [`recompute`]. Statistical checks use a
//! one-sided 3σ allowance.

mod collapse;
mod kilian;
mod merkle;
mod quantum;
mod rewind;
pub mod stats;

pub use collapse::{collision_state, CollisionSetup};
pub use rewind::{qubit_failure_probability, worst_qubit_overlap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::ops::Range;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("config: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ExpError>;

pub(crate) fn run_err(e: impl std::fmt::Display) -> ExpError {
    ExpError::Run(e.to_string())
}

/// Validated parameter map: every key is declared by the scenario's
/// defaults and has the default's JSON type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params(pub Map<String, Value>);

impl Params {
    fn merge(defaults: &Value, overrides: &Map<String, Value>) -> Result<Self> {
        let mut out = defaults.as_object().cloned().unwrap_or_default();
        for (k, v) in overrides {
            let Some(d) = out.get(k) else {
                return Err(ExpError::Config(format!("unknown parameter `{k}`")));
            };
            let same = matches!(
                (d, v),
                (Value::Number(_), Value::Number(_))
                    | (Value::Bool(_), Value::Bool(_))
                    | (Value::String(_), Value::String(_))
                    | (Value::Array(_), Value::Array(_))
            );
            if !same {
                return Err(ExpError::Config(format!("parameter `{k}` has the wrong type")));
            }
            out.insert(k.clone(), v.clone());
        }
        Ok(Params(out))
    }

    pub fn f64(&self, k: &str) -> f64 {
        self.0[k].as_f64().unwrap_or_else(|| panic!("numeric parameter `{k}`"))
    }

    pub fn usize(&self, k: &str) -> usize {
        let v = self.f64(k);
        assert!(v >= 0.0 && v.fract() == 0.0, "parameter `{k}` must be a non-negative integer");
        v as usize
    }

    pub fn str(&self, k: &str) -> &str {
        self.0[k].as_str().unwrap_or_else(|| panic!("string parameter `{k}`"))
    }

    pub fn usize_list(&self, k: &str) -> Vec<usize> {
        self.0[k].as_array().map(|a| a.iter().filter_map(|v| v.as_u64()).map(|v| v as usize).collect()).unwrap_or_default()
    }

    pub fn f64_list(&self, k: &str) -> Vec<f64> {
        self.0[k].as_array().map(|a| a.iter().filter_map(|v| v.as_f64()).collect()).unwrap_or_default()
    }
}

/// On-disk config: `{"scenario": ..., "params": {...}, "seeds": "a..b", "jobs": n}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub seeds: Option<String>,
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Parses `a..b` (half-open).
pub fn parse_seeds(s: &str) -> Result<Range<u64>> {
    let bad = || ExpError::Config(format!("seed range `{s}` is not `a..b`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a >= b {
        return Err(bad());
    }
    Ok(a..b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `statistic ≤ bound + 3σ`.
    AtMost,
    /// `statistic ≥ bound − 3σ`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub direction: Direction,
    pub statistic: f64,
    pub bound: f64,
    pub sigma: f64,
    pub samples: usize,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, direction: Direction, statistic: f64, bound: f64, sigma: f64, samples: usize) -> Self {
        let pass = match direction {
            Direction::AtMost => statistic <= bound + 3.0 * sigma,
            Direction::AtLeast => statistic >= bound - 3.0 * sigma,
        };
        Check { name: name.into(), direction, statistic, bound, sigma, samples, pass: pass && statistic.is_finite() }
    }

    pub fn at_most(name: &str, statistic: f64, bound: f64, sigma: f64, samples: usize) -> Self {
        Self::new(name, Direction::AtMost, statistic, bound, sigma, samples)
    }

    pub fn at_least(name: &str, statistic: f64, bound: f64, sigma: f64, samples: usize) -> Self {
        Self::new(name, Direction::AtLeast, statistic, bound, sigma, samples)
    }

    /// Exact check with no statistical allowance.
    pub fn exact_max(name: &str, statistic: f64, bound: f64, samples: usize) -> Self {
        Self::new(name, Direction::AtMost, statistic, bound, 0.0, samples)
    }

    pub fn exact_min(name: &str, statistic: f64, bound: f64, samples: usize) -> Self {
        Self::new(name, Direction::AtLeast, statistic, bound, 0.0, samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub params: Params,
    pub seeds: (u64, u64),
    pub raw: Vec<Value>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_clock_s: f64,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Writes `raw.jsonl` and `summary.json` (everything but the raw rows).
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut raw = String::new();
        for r in &self.raw {
            raw.push_str(&serde_json::to_string(r)?);
            raw.push('\n');
        }
        std::fs::write(dir.join("raw.jsonl"), raw)?;
        let summary = serde_json::json!({
            "scenario": self.scenario,
            "params": self.params,
            "seeds": [self.seeds.0, self.seeds.1],
            "records": self.raw.len(),
            "checks": self.checks,
            "pass": self.pass,
            "wall_clock_s": self.wall_clock_s,
        });
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
        Ok(())
    }
}

type RunFn = fn(&Params, Range<u64>) -> Result<Vec<Value>>;
type SummaryFn = fn(&Params, &[Value]) -> Result<Vec<Check>>;

pub struct Scenario {
    pub name: &'static str,
    pub about: &'static str,
    pub default_seeds: (u64, u64),
    defaults: fn() -> Value,
    run: RunFn,
    summarize: SummaryFn,
}

impl Scenario {
    pub fn defaults(&self) -> Value {
        (self.defaults)()
    }
}

pub fn scenarios() -> Vec<Scenario> {
    vec![
        merkle::SCENARIO,
        quantum::JORDAN,
        quantum::ALTERNATING,
        rewind::VALEST,
        rewind::REPAIR,
        rewind::REPETITION,
        rewind::FORK,
        rewind::SIGMA,
        collapse::SCENARIO,
        kilian::SCENARIO,
    ]
}

pub fn find(name: &str) -> Result<Scenario> {
    scenarios().into_iter().find(|s| s.name == name).ok_or_else(|| ExpError::UnknownScenario(name.into()))
}

/// Maps `f` over the seeds on `jobs` worker threads, keeping seed order.
pub fn par_seeds<T: Send>(seeds: Range<u64>, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    seeds.into_par_iter().map(f).collect()
}

/// Runs a scenario. `seeds` and `jobs` override the config's.
pub fn run_scenario(name: &str, cfg: &ScenarioConfig, seeds: Option<Range<u64>>, jobs: Option<usize>) -> Result<Report> {
    let sc = find(name)?;
    if let Some(s) = &cfg.scenario {
        if s != name {
            return Err(ExpError::Config(format!("config is for `{s}`, not `{name}`")));
        }
    }
    let params = Params::merge(&sc.defaults(), &cfg.params)?;
    let seeds = match (seeds, &cfg.seeds) {
        (Some(s), _) => s,
        (None, Some(s)) => parse_seeds(s)?,
        (None, None) => sc.default_seeds.0..sc.default_seeds.1,
    };
    let jobs = jobs.or(cfg.jobs).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(run_err)?;
    let start = Instant::now();
    let raw = pool.install(|| (sc.run)(&params, seeds.clone()))?;
    let mut checks = (sc.summarize)(&params, &raw)?;
    let wall = start.elapsed().as_secs_f64();
    if let Some(limit) = params.0.get("max_seconds").and_then(|v| v.as_f64()) {
        checks.push(Check::exact_max("runtime_s", wall, limit, 1));
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(Report { scenario: name.into(), params, seeds: (seeds.start, seeds.end), raw, checks, pass, wall_clock_s: wall })
}

/// The statistical checks of a report, rederived from its raw rows.
pub fn recompute(report: &Report) -> Result<Vec<Check>> {
    let sc = find(&report.scenario)?;
    (sc.summarize)(&report.params, &report.raw)
}

pub(crate) fn field_f64(v: &Value, k: &str) -> Result<f64> {
    v.get(k).and_then(|x| x.as_f64()).ok_or_else(|| ExpError::Run(format!("raw row lacks numeric `{k}`")))
}

pub(crate) fn field_bool(v: &Value, k: &str) -> Result<bool> {
    v.get(k).and_then(|x| x.as_bool()).ok_or_else(|| ExpError::Run(format!("raw row lacks boolean `{k}`")))
}

pub(crate) fn rows<'a>(raw: &'a [Value], kind: &'a str) -> impl Iterator<Item = &'a Value> + 'a {
    raw.iter().filter(move |r| r.get("kind").and_then(|k| k.as_str()) == Some(kind))
}
