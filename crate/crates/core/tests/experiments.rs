use pqkilian::experiments::stats::{chi2_gof, chi2_two_sample, freq_sigma, linear_fit, mean, merge_cells, sd, se};
use pqkilian::experiments::{
    collision_state, find, parse_seeds, recompute, run_scenario, scenarios, Check, ExpError, Report, ScenarioConfig,
};
use pqkilian::hash_commitment::{bits_to_u64, random_bits, HashFamily, LEAF_TAG};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Map, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::path::PathBuf;

fn cfg(params: Value) -> ScenarioConfig {
    ScenarioConfig { params: params.as_object().cloned().unwrap_or_default(), ..Default::default() }
}

fn statistical(r: &Report) -> Vec<Check> {
    r.checks.iter().filter(|c| c.name != "runtime_s").cloned().collect()
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

#[test]
fn seed_ranges() {
    assert_eq!(parse_seeds("0..10").unwrap(), 0..10);
    assert_eq!(parse_seeds(" 5 .. 7 ").unwrap(), 5..7);
    for bad in ["", "3", "5..5", "7..2", "a..b", "0..-1", "0...3"] {
        assert!(matches!(parse_seeds(bad), Err(ExpError::Config(_))), "{bad}");
    }
}

#[test]
fn registry_is_complete() {
    let names: Vec<&str> = scenarios().iter().map(|s| s.name).collect();
    for want in ["merkle", "jordan", "alternating", "valest", "repair", "repetition", "fork", "sigma", "collapse", "kilian-e2e"] {
        assert_eq!(names.iter().filter(|&&n| n == want).count(), 1, "{want}");
    }
    for s in scenarios() {
        assert!(s.defaults().is_object());
        assert!(s.default_seeds.0 < s.default_seeds.1);
    }
    assert!(matches!(find("nope"), Err(ExpError::UnknownScenario(_))));
}

#[test]
fn config_validation() {
    let unknown = run_scenario("merkle", &cfg(json!({ "bogus": 1 })), Some(0..2), Some(1));
    assert!(matches!(unknown, Err(ExpError::Config(_))));
    let wrong_type = run_scenario("merkle", &cfg(json!({ "lambda": "big" })), Some(0..2), Some(1));
    assert!(matches!(wrong_type, Err(ExpError::Config(_))));
    let mismatch = ScenarioConfig { scenario: Some("fork".into()), ..Default::default() };
    assert!(matches!(run_scenario("merkle", &mismatch, Some(0..2), Some(1)), Err(ExpError::Config(_))));
    assert!(serde_json::from_str::<ScenarioConfig>(r#"{"params": {}, "extra": 1}"#).is_err());
    let ok: ScenarioConfig = serde_json::from_str(r#"{"seeds": "0..3"}"#).unwrap();
    assert_eq!(ok.seeds.as_deref(), Some("0..3"));
    assert!(ok.params.is_empty());
}

#[test]
fn shipped_configs_match_their_scenarios() {
    let dir = data_dir().join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let c = ScenarioConfig::load(&path).unwrap();
        let sc = find(c.scenario.as_deref().unwrap()).unwrap();
        let defaults = sc.defaults();
        for (k, v) in &c.params {
            let d = defaults.get(k).unwrap_or_else(|| panic!("{}: `{k}`", path.display()));
            assert_eq!(d.is_number(), v.is_number(), "{k}");
        }
        if let Some(s) = &c.seeds {
            parse_seeds(s).unwrap();
        }
        seen += 1;
    }
    assert!(seen >= 4);
    let fork = ScenarioConfig::load(&dir.join("fork.json")).unwrap();
    let r = run_scenario("fork", &fork, Some(0..2), Some(1)).unwrap();
    assert_eq!(r.params.0["questions"], json!(64));
    assert_eq!(r.raw.len(), 2);
}

#[test]
fn seed_override_precedence() {
    let c = ScenarioConfig { seeds: Some("3..5".into()), ..Default::default() };
    let r = run_scenario("jordan", &c, None, Some(1)).unwrap();
    assert_eq!(r.seeds, (3, 5));
    let r = run_scenario("jordan", &c, Some(7..8), Some(1)).unwrap();
    assert_eq!(r.seeds, (7, 8));
}

#[test]
fn raw_rows_do_not_depend_on_worker_count() {
    for (name, params, seeds) in [
        ("merkle", json!({ "max_len": 64 }), 0..20),
        ("valest", json!({ "epsilon": 0.3, "delta": 0.2 }), 0..12),
        ("collapse", json!({}), 0..50),
    ] {
        let a = run_scenario(name, &cfg(params.clone()), Some(seeds.clone()), Some(1)).unwrap();
        let b = run_scenario(name, &cfg(params), Some(seeds), Some(3)).unwrap();
        assert_eq!(serde_json::to_string(&a.raw).unwrap(), serde_json::to_string(&b.raw).unwrap(), "{name}");
        assert_eq!(statistical(&a), statistical(&b));
    }
}

#[test]
fn checks_are_recomputable_from_raw_rows() {
    for (name, params, seeds) in [
        ("merkle", json!({ "max_len": 64 }), 0..30),
        ("jordan", json!({ "max_dim": 12 }), 0..10),
        ("alternating", json!({ "dim": 4, "t": 40, "trials": 200 }), 0..2),
        ("valest", json!({ "epsilon": 0.3, "delta": 0.2 }), 0..20),
        ("repair", json!({ "epsilon": 0.3, "delta": 0.2, "qubit_trials": 10 }), 0..5),
        ("fork", json!({ "questions": 16, "rounds": 3, "eta": 0.9 }), 0..3),
        ("sigma", json!({ "k": 2, "epsilon": 1.0 }), 0..2),
        ("collapse", json!({}), 0..100),
    ] {
        let r = run_scenario(name, &cfg(params), Some(seeds), Some(1)).unwrap();
        assert_eq!(recompute(&r).unwrap(), statistical(&r), "{name}");
        let round: Report = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(recompute(&round).unwrap(), statistical(&r), "{name}");
        assert_eq!(r.pass, r.checks.iter().all(|c| c.pass));
    }
}

#[test]
fn report_files() {
    let r = run_scenario("jordan", &ScenarioConfig::default(), Some(0..3), Some(1)).unwrap();
    let dir = std::env::temp_dir().join(format!("pqk-report-{}", std::process::id()));
    r.write(&dir).unwrap();
    let raw = std::fs::read_to_string(dir.join("raw.jsonl")).unwrap();
    assert_eq!(raw.lines().count(), 3);
    for line in raw.lines() {
        serde_json::from_str::<Value>(line).unwrap();
    }
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["records"], json!(3));
    assert_eq!(summary["scenario"], json!("jordan"));
    assert!(summary.get("raw").is_none());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn one_sided_rule() {
    assert!(Check::at_most("a", 1.29, 1.0, 0.1, 10).pass);
    assert!(!Check::at_most("a", 1.31, 1.0, 0.1, 10).pass);
    assert!(Check::at_least("b", 0.71, 1.0, 0.1, 10).pass);
    assert!(!Check::at_least("b", 0.69, 1.0, 0.1, 10).pass);
    assert!(!Check::exact_max("c", 1.0 + 1e-12, 1.0, 1).pass);
    assert!(Check::exact_min("d", 1.0, 1.0, 1).pass);
    assert!(!Check::at_most("e", f64::NAN, 1.0, 0.1, 1).pass);
}

#[test]
fn summary_statistics() {
    let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
    assert_eq!(mean(&xs), 5.0);
    assert!((sd(&xs) - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    assert!((se(&xs) - (32.0f64 / 7.0).sqrt() / 8f64.sqrt()).abs() < 1e-12);
    assert!(mean(&[]).is_nan());
    assert_eq!(sd(&[3.0]), 0.0);
    assert!((freq_sigma(0.1, 100) - 0.03).abs() < 1e-12);
    assert_eq!(freq_sigma(1.5, 10), 0.0);
}

#[test]
fn linear_fit_oracle() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [3.0, 5.0, 7.0, 9.0];
    let (a, b, r2) = linear_fit(&x, &y);
    assert!((a - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    // Hand-computed: a = 0.6, b = 2.2, R² = 0.6.
    let (a, b, r2) = linear_fit(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 5.0, 4.0, 5.0]);
    assert!((a - 0.6).abs() < 1e-12, "{a}");
    assert!((b - 2.2).abs() < 1e-12, "{b}");
    assert!((r2 - 0.6).abs() < 1e-12, "{r2}");
}

#[test]
fn merged_cells() {
    assert_eq!(merge_cells(&[1.0, 2.0, 3.0, 6.0, 1.0], 5.0), vec![0..3, 3..5]);
    assert_eq!(merge_cells(&[10.0, 10.0], 5.0), vec![0..1, 1..2]);
    assert_eq!(merge_cells(&[1.0, 1.0], 5.0), vec![0..2]);
}

#[test]
fn chi_square_oracles() {
    // Die rolls: 8 9 19 5 8 11 against uniform, n = 60.
    let (stat, dof, p) = chi2_gof(&[8, 9, 19, 5, 8, 11], &[1.0 / 6.0; 6]);
    assert!((stat - 11.6).abs() < 1e-12);
    assert_eq!(dof, 5);
    assert!((p - (1.0 - ChiSquared::new(5.0).unwrap().cdf(11.6))).abs() < 1e-12);

    // 2x2 table [[20, 30], [30, 20]]: every expected count is 25.
    let (stat, dof, p) = chi2_two_sample(&[20, 30], &[30, 20]);
    assert!((stat - 4.0).abs() < 1e-12);
    assert_eq!(dof, 1);
    assert!((p - (1.0 - ChiSquared::new(1.0).unwrap().cdf(4.0))).abs() < 1e-12);

    let (stat, _, p) = chi2_two_sample(&[10, 20, 30], &[10, 20, 30]);
    assert_eq!(stat, 0.0);
    assert!((p - 1.0).abs() < 1e-12);
}

#[test]
fn collision_state_needs_a_collision() {
    let fam = HashFamily::toy(8);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let key = random_bits(&mut rng, fam.key_bits());
    let x = random_bits(&mut rng, fam.input_bits());
    let x2 = fam.toy_collision(&key, LEAF_TAG, &x).unwrap();
    let (a, b) = (bits_to_u64(&x), bits_to_u64(&x2));
    assert_ne!(a, b);
    let cs = collision_state(fam, &key, a, b).unwrap();
    assert!((cs.state.amps.norm() - 1.0).abs() < 1e-12);
    assert_eq!(cs.state.amps.iter().filter(|c| c.norm() > 0.0).count(), 2);
    assert!(matches!(collision_state(fam, &key, a, a), Err(ExpError::Run(_))));
    let other = (0..1u64 << fam.input_bits())
        .find(|&u| u != a && u != b && collision_state(fam, &key, a, u).is_err())
        .unwrap();
    assert!(matches!(collision_state(fam, &key, a, other), Err(ExpError::Run(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merged_cells_partition(expected in prop::collection::vec(0.0f64..10.0, 1..30)) {
        let cells = merge_cells(&expected, 5.0);
        prop_assert_eq!(cells.first().unwrap().start, 0);
        prop_assert_eq!(cells.last().unwrap().end, expected.len());
        for w in cells.windows(2) {
            prop_assert_eq!(w[0].end, w[1].start);
        }
        let total: f64 = expected.iter().sum();
        if total >= 5.0 {
            for c in &cells {
                prop_assert!(expected[c.clone()].iter().sum::<f64>() >= 5.0 - 1e-9);
            }
        }
    }

    #[test]
    fn linear_fit_recovers_lines(a in -10.0f64..10.0, b in -10.0f64..10.0, n in 3usize..20) {
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let (fa, fb, r2) = linear_fit(&x, &y);
        prop_assert!((fa - a).abs() < 1e-9 && (fb - b).abs() < 1e-9);
        prop_assert!(r2 > 1.0 - 1e-9);
    }

    #[test]
    fn config_round_trip(seeds in 0u64..1000, span in 1u64..1000, jobs in prop::option::of(1usize..8)) {
        let mut params = Map::new();
        params.insert("lambda".into(), json!(64));
        let c = ScenarioConfig { scenario: Some("merkle".into()), params, seeds: Some(format!("{}..{}", seeds, seeds + span)), jobs };
        let back: ScenarioConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        prop_assert_eq!(parse_seeds(back.seeds.as_deref().unwrap()).unwrap(), seeds..seeds + span);
        prop_assert_eq!(back, c);
    }
}
