use nalgebra::{DMatrix, DVector};
use pqkilian::experiments::stats::{chi2_two_sample, mean, se};
use pqkilian::experiments::{qubit_failure_probability, worst_qubit_overlap};
use pqkilian::quantum_sim::state::C;
use pqkilian::quantum_sim::StateVector;
use pqkilian::rewinding::game::{fixed_answer_strategy, random_strategy, tilted_prover, overlap_game};
use pqkilian::rewinding::sigma::{interpolate_at_zero, pow_mod, SigmaProver, CHALLENGES, GENERATOR, MODULUS, ORDER};
use pqkilian::rewinding::{
    check_fork, exact_value, fork, naive_play, repair, repair_expt, special_sound_extract, ForkOutcome, Game,
    GameModel, ProjectiveMeasurement, RepeatedParams, RewindError, SpectralValEst, ValEstParams, ValEstWorkspace,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::sync::Arc;

fn re(x: f64) -> C {
    C::new(x, 0.0)
}

fn e0(d: usize) -> DVector<C> {
    StateVector::basis(d, 0).amps
}

/// Expected number of wins when the projectors `|v_r⟩⟨v_r|`,
/// `v_r = √ε|0⟩ + √(1−ε)|r+1⟩`, are measured in order on `|0⟩`: the
/// state evolves by dephasing, so the expectation is a trace sum.
fn overlap_oracle(questions: usize, eps: f64, rounds: usize) -> f64 {
    let d = questions + 1;
    let mut rho = DMatrix::<C>::zeros(d, d);
    rho[(0, 0)] = re(1.0);
    let id = DMatrix::<C>::identity(d, d);
    let mut wins = 0.0;
    for r in 0..rounds {
        let mut v = DVector::<C>::zeros(d);
        v[0] = re(eps.sqrt());
        v[r + 1] = re((1.0 - eps).sqrt());
        let p = &v * v.adjoint();
        let q = &id - &p;
        wins += (&p * &rho).trace().re;
        rho = &p * &rho * &p + &q * &rho * &q;
    }
    wins
}

#[test]
fn overlap_oracle_frozen_values() {
    let cases = [(16, 0.5, 16, 0.99998), (16, 0.5, 8, 0.99609), (64, 0.1, 64, 0.55555), (64, 0.1, 8, 0.44199)];
    for (nq, eps, rounds, want) in cases {
        let got = overlap_oracle(nq, eps, rounds);
        assert!((got - want).abs() < 1e-5, "({nq}, {eps}, {rounds}): {got}");
        assert!(got <= 1.0 / (2.0 - 2.0 * eps) + 1e-12);
    }
}

#[test]
fn overlap_win_projectors_match_the_oracle() {
    let (g, s) = overlap_game(6, 0.3).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for r in 0..6 {
        let pi = s.win_projector(&g, r);
        let mut v = DVector::<C>::zeros(7);
        v[0] = re(0.3f64.sqrt());
        v[r + 1] = re(0.7f64.sqrt());
        for _ in 0..4 {
            let psi = StateVector::random(7, &mut rng).amps;
            let want = v.dotc(&psi).norm_sqr();
            assert!((pi.probability(&psi) - want).abs() < 1e-10);
        }
    }
    assert!((exact_value(&g, &s, &e0(7)) - 0.3).abs() < 1e-12);
}

#[test]
fn naive_play_matches_the_oracle() {
    let (nq, eps, rounds) = (16, 0.5, 8);
    let (g, s) = overlap_game(nq, eps).unwrap();
    let x0 = e0(s.dim());
    let model = GameModel::reduced(Arc::new(g), Arc::new(s), std::slice::from_ref(&x0), false).unwrap();
    let y0 = model.restrict(&x0).unwrap();
    let order: Vec<usize> = (0..rounds).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    let wins: Vec<f64> = (0..4000)
        .map(|_| naive_play(&model, &y0, &order, &mut rng).unwrap().iter().filter(|&&b| b).count() as f64)
        .collect();
    let want = overlap_oracle(nq, eps, rounds);
    assert!((mean(&wins) - want).abs() <= 4.0 * se(&wins), "{} vs {want}", mean(&wins));
}

#[test]
fn qubit_repair_failure_formula() {
    for budget in [1u64, 4, 16, 64] {
        let worst = worst_qubit_overlap(budget);
        let x = 2.0 * worst * (1.0 - worst);
        assert!((x - 1.0 / (budget as f64 + 1.0)).abs() < 1e-12);
        let peak = qubit_failure_probability(worst, budget);
        let grid = (1..1000).map(|i| qubit_failure_probability(i as f64 / 1000.0, budget)).fold(0.0, f64::max);
        assert!(peak >= grid - 1e-12, "T={budget}: {peak} < {grid}");
        assert!(peak <= 1.0 / budget as f64);
    }
}

#[test]
fn qubit_repair_simulation_matches_formula() {
    let obs = DMatrix::from_diagonal(&DVector::from_vec(vec![re(0.0), re(1.0)]));
    let m = ProjectiveMeasurement::from_observable(&obs, 1e-9);
    let mut rng = ChaCha20Rng::seed_from_u64(23);
    for (budget, q) in [(4u64, 0.2), (4, 0.5), (16, worst_qubit_overlap(16))] {
        let theta = DVector::from_vec(vec![re(q.sqrt()), re((1.0 - q).sqrt())]);
        let proj = &theta * theta.adjoint();
        let trials = 4000;
        let mut fails = 0;
        for _ in 0..trials {
            let (rec, _) = repair_expt(&m, &proj, &e0(2), 0.1, budget, &mut rng).unwrap();
            fails += usize::from(!rec.repair.success);
            assert_eq!(rec.repair.count, 1 + 2 * rec.repair.pairs);
            assert!(rec.repair.pairs <= budget);
        }
        let freq = fails as f64 / trials as f64;
        let exact = qubit_failure_probability(q, budget);
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((freq - exact).abs() <= 4.0 * sigma + 1e-3, "T={budget} q={q}: {freq} vs {exact}");
    }
}

fn small_game(seed: u64) -> (Arc<Game>, Arc<pqkilian::rewinding::Strategy>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let table: Vec<bool> = (0..8).map(|_| rng.random::<bool>()).collect();
    let g = Game::new(4, 2, |r, z| table[r * 2 + z]).unwrap();
    let s = random_strategy(&g, 2, &mut rng);
    (Arc::new(g), Arc::new(s))
}

#[test]
fn valest_round_count() {
    let p = ValEstParams::new(0.1, 0.05).unwrap();
    assert_eq!(p.t, 369);
    for (eps, delta) in [(0.1f64, 0.05f64), (0.3, 0.2), (0.05, 0.001), (0.9, 0.9)] {
        let a = ((1.0 / (2.0 * (delta / 4.0))).ln() / (2.0 * (eps / 2.0) * (eps / 2.0)) / 2.0).ceil();
        let b = ((delta / 2.0).ln() / 0.625f64.ln()).ceil();
        assert_eq!(ValEstParams::new(eps, delta).unwrap().t, a.max(b).max(1.0) as u64);
    }
    assert!(ValEstParams::new(0.0, 0.1).is_err());
    assert!(ValEstParams::new(0.1, 1.0).is_err());
}

#[test]
fn grid_window_is_the_estimates_in_range() {
    let p = ValEstParams::new(0.2, 0.1).unwrap();
    let (a, b) = p.grid_window(0.3, 0.6).unwrap();
    for m in 0..=2 * p.t {
        let e = p.estimate(m);
        assert_eq!((a..=b).contains(&m), (0.3 - 1e-12..=0.6 + 1e-12).contains(&e), "m={m}");
    }
    assert!(p.grid_window(0.6, 0.3).is_none());
}

#[test]
fn literal_and_spectral_valest_agree() {
    let (g, s) = small_game(3);
    let params = ValEstParams::new(0.2, 0.1).unwrap();
    let ws = ValEstWorkspace::new(&g, &s).unwrap();
    let model = GameModel::full(g.clone(), s.clone(), false).unwrap();
    let spectral = SpectralValEst::new(&model, params);
    let psi = StateVector::basis(s.dim(), 0);
    let exact = exact_value(&g, &s, &psi.amps);
    let mut rng = ChaCha20Rng::seed_from_u64(29);
    let cells = 2 * params.t as usize + 1;
    let (mut ha, mut hb) = (vec![0u64; cells], vec![0u64; cells]);
    let (mut ea, mut eb) = (Vec::new(), Vec::new());
    for _ in 0..1500 {
        let (a, _, _) = ws.run(&params, &psi, &mut rng).unwrap();
        let (b, _) = spectral.run(&psi.amps, &mut rng).unwrap();
        ha[a.repeats as usize] += 1;
        hb[b.repeats as usize] += 1;
        ea.push(a.estimate);
        eb.push(b.estimate);
    }
    let (_, _, pval) = chi2_two_sample(&ha, &hb);
    assert!(pval > 1e-3, "p-value {pval}");
    assert!((mean(&ea) - exact).abs() <= 4.0 * se(&ea));
    assert!((mean(&eb) - exact).abs() <= 4.0 * se(&eb));
}

#[test]
fn always_winning_strategy_is_unbiased_but_noisy() {
    let g = Arc::new(Game::new(3, 2, |_, _| true).unwrap());
    let s = Arc::new(fixed_answer_strategy(&g, 1, 0));
    let params = ValEstParams::new(0.2, 0.1).unwrap();
    let ws = ValEstWorkspace::new(&g, &s).unwrap();
    let psi = StateVector::basis(s.dim(), 0);
    assert!((exact_value(&g, &s, &psi.amps) - 1.0).abs() < 1e-12);
    let mut rng = ChaCha20Rng::seed_from_u64(31);
    let est: Vec<f64> = (0..1000).map(|_| ws.run(&params, &psi, &mut rng).unwrap().0.estimate).collect();
    assert!((mean(&est) - 1.0).abs() <= 4.0 * se(&est), "mean {}", mean(&est));
    // Each pair repeats with probability 3/4, so single runs scatter.
    assert!(est.iter().any(|&e| (e - 1.0).abs() > 1e-9));
}

#[test]
fn repair_inside_the_window_costs_one_measurement() {
    let (g, s) = small_game(4);
    let model = GameModel::full(g, s, false).unwrap();
    let m = SpectralValEst::new(&model, ValEstParams::new(0.2, 0.1).unwrap());
    let r = (0..4).find(|&r| model.game.accepting(r).len() == 1).unwrap();
    let pi = model.win[r].clone();
    let mut rng = ChaCha20Rng::seed_from_u64(37);
    let y = &pi * StateVector::random(model.dim(), &mut rng).amps;
    let x = &y / re(y.norm());
    let (out, post) = repair(&m, &pi, &x, -1.0, 2.0, 8, &mut rng).unwrap();
    assert!(out.success);
    assert_eq!((out.pairs, out.count), (0, 1));
    assert!((post.norm() - 1.0).abs() < 1e-9);

    let z = StateVector::random(model.dim(), &mut rng).amps;
    let outside = &x + (&z - &pi * &z);
    assert!(matches!(repair(&m, &pi, &outside, 0.0, 1.0, 8, &mut rng), Err(RewindError::Invalid(_))));
}

#[test]
fn reduced_model_preserves_values() {
    let (g, s) = small_game(6);
    let x0 = e0(s.dim());
    let model = GameModel::reduced(g.clone(), s.clone(), std::slice::from_ref(&x0), false).unwrap();
    assert!(model.dim() <= s.dim());
    let y0 = model.restrict(&x0).unwrap();
    assert!((model.value(&y0) - exact_value(&g, &s, &x0)).abs() < 1e-10);
    assert!((model.embed(&y0) - &x0).norm() < 1e-10);
    let full = GameModel::full(g.clone(), s.clone(), false).unwrap();
    assert!((full.value(&full.restrict(&x0).unwrap()) - exact_value(&g, &s, &x0)).abs() < 1e-10);
}

fn tilted_model(eta: f64, record: bool) -> (GameModel, DVector<C>, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(41);
    let (nr, na) = (16, 4);
    let correct: Vec<usize> = (0..nr).map(|_| rng.random_range(0..na)).collect();
    let g = Game::new(nr, na, |r, z| z == correct[r]).unwrap();
    let s = tilted_prover(&g, 4, eta, |r| correct[r], &mut rng).unwrap();
    let (g, s) = (Arc::new(g), Arc::new(s));
    let x0 = e0(s.dim());
    let value = exact_value(&g, &s, &x0);
    let model = GameModel::reduced(g, s, std::slice::from_ref(&x0), record).unwrap();
    let y0 = model.restrict(&x0).unwrap();
    (model, y0, value)
}

#[test]
fn tilted_prover_value_is_eta() {
    let (_, _, value) = tilted_model(0.7, false);
    assert!((value - 0.7).abs() < 1e-10);
}

#[test]
fn fork_transcripts_are_well_formed() {
    let (model, y0, _) = tilted_model(0.9, true);
    let mut rng = ChaCha20Rng::seed_from_u64(43);
    let mut total = 0;
    for _ in 0..5 {
        let challenges: Vec<usize> = (0..4).map(|_| rng.random_range(0..16)).collect();
        let out = fork(&model, &y0, &challenges, 0.1, 64.0, &mut rng).unwrap();
        check_fork(&model, &challenges, &out).unwrap();
        assert_eq!(out.play.rounds.len(), 4);
        for &(r, z) in &out.transcripts {
            assert!(model.game.accepts(r, z));
        }
        total += out.transcripts.len();
    }
    assert!(total > 0);
}

#[test]
fn check_fork_rejects_bad_transcripts() {
    let (model, y0, _) = tilted_model(0.9, true);
    let mut rng = ChaCha20Rng::seed_from_u64(47);
    let challenges = vec![0, 1, 2];
    let out = fork(&model, &y0, &challenges, 0.1, 64.0, &mut rng).unwrap();
    let good = (0..model.game.answers).find(|&z| model.game.accepts(0, z)).unwrap();
    let bad = (0..model.game.answers).find(|&z| !model.game.accepts(0, z)).unwrap();
    let with = |t: Vec<(usize, usize)>| ForkOutcome { transcripts: t, play: out.play.clone() };
    assert!(check_fork(&model, &challenges, &with(vec![(0, good)])).is_ok());
    assert!(check_fork(&model, &challenges, &with(vec![(0, bad)])).is_err());
    assert!(check_fork(&model, &challenges, &with(vec![(0, good), (0, good)])).is_err());
    assert!(check_fork(&model, &[1, 2], &with(vec![(0, good)])).is_err());
}

#[test]
fn fork_needs_recorded_answers() {
    let (model, y0, _) = tilted_model(0.9, false);
    let mut rng = ChaCha20Rng::seed_from_u64(53);
    assert!(matches!(fork(&model, &y0, &[0, 1], 0.1, 64.0, &mut rng), Err(RewindError::Invalid(_))));
}

#[test]
fn repeated_params_follow_eta0() {
    let p = RepeatedParams::new(8, 0.25, 64.0).unwrap();
    assert!((p.epsilon - 0.25 / 18.0).abs() < 1e-15);
    assert!((p.delta - 0.0625 / (64.0 * 64.0)).abs() < 1e-15);
    assert_eq!(p.budget, (1.0 / p.delta.sqrt()).ceil() as u64);
}

#[test]
fn sigma_honest_responses_verify_and_interpolate() {
    let mut rng = ChaCha20Rng::seed_from_u64(59);
    for k in 1..5 {
        let prover = SigmaProver::new(k, &mut rng);
        let inst = prover.instance();
        assert_eq!(inst.x, pow_mod(GENERATOR, prover.witness, MODULUS));
        for r in 0..CHALLENGES {
            assert!(inst.verify(r, prover.respond(r)));
            assert!(!inst.verify(r, (prover.respond(r) + 1) % ORDER));
        }
        for _ in 0..10 {
            let mut rs: Vec<usize> = Vec::new();
            while rs.len() < k {
                let r = rng.random_range(0..CHALLENGES);
                if !rs.contains(&r) {
                    rs.push(r);
                }
            }
            let pts: Vec<(usize, u64)> = rs.iter().map(|&r| (r, prover.respond(r))).collect();
            assert_eq!(interpolate_at_zero(&pts), prover.witness);
        }
    }
}

#[test]
fn sigma_extraction() {
    let mut rng = ChaCha20Rng::seed_from_u64(61);
    let mut hits = 0;
    for _ in 0..4 {
        let prover = SigmaProver::new(2, &mut rng);
        let inst = prover.instance();
        let s = prover.quantum(2, 1.0, |_| true, &mut rng).unwrap();
        let out = special_sound_extract(&inst, s, 0.5, &mut rng).unwrap();
        assert_eq!(out.rounds, 32);
        assert!(out.witness.is_none() || out.witness == Some(prover.witness));
        hits += usize::from(out.witness == Some(prover.witness));
    }
    assert!(hits >= 3, "{hits}/4");

    // One valid challenge is never enough for k = 2.
    for _ in 0..3 {
        let prover = SigmaProver::new(2, &mut rng);
        let inst = prover.instance();
        let s = prover.quantum(2, 1.0, |r| r == 0, &mut rng).unwrap();
        let out = special_sound_extract(&inst, s, 0.5, &mut rng).unwrap();
        assert_eq!(out.witness, None);
        assert!(out.fork.transcripts.iter().all(|&(r, _)| r == 0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reduced_value_matches_exact(seed in any::<u64>()) {
        let (g, s) = small_game(seed);
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 1);
        let psi = StateVector::random(s.dim(), &mut rng).amps;
        let model = GameModel::reduced(g.clone(), s.clone(), std::slice::from_ref(&psi), false).unwrap();
        let y = model.restrict(&psi).unwrap();
        prop_assert!((model.value(&y) - exact_value(&g, &s, &psi)).abs() < 1e-9);
    }

    #[test]
    fn estimates_lie_on_the_grid(seed in any::<u64>()) {
        let (g, s) = small_game(seed);
        let model = GameModel::full(g, s, false).unwrap();
        let params = ValEstParams::new(0.3, 0.2).unwrap();
        let m = SpectralValEst::new(&model, params);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (rec, post) = m.run(&e0(model.dim()), &mut rng).unwrap();
        prop_assert!(rec.repeats <= 2 * params.t);
        prop_assert!((rec.estimate - params.estimate(rec.repeats)).abs() < 1e-15);
        prop_assert!((post.norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn answer_measurement_after_a_win_is_collapsing() {
    let (model, _, _) = tilted_model(0.6, true);
    let responses = model.responses.as_ref().unwrap();
    for r in 0..model.game.questions {
        assert_eq!(responses[r].len(), 1);
        let (z, p) = &responses[r][0];
        assert!(model.game.accepts(r, *z));
        assert!((p - &model.win[r]).norm() < 1e-9, "r={r}");
    }
}
