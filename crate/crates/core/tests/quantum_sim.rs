use nalgebra::{DMatrix, DVector};
use pqkilian::experiments::stats::chi2_gof;
use pqkilian::quantum_sim::binomial;
use pqkilian::quantum_sim::density::trace_distance;
use pqkilian::quantum_sim::state::{random_projector, random_unitary};
use pqkilian::quantum_sim::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{Binomial, Discrete, DiscreteCDF};
use std::sync::Arc;

fn c(x: f64) -> C {
    C::new(x, 0.0)
}

/// Checks a decomposition against the two projectors directly.
fn audit(a: &DMatrix<C>, b: &DMatrix<C>, j: &JordanDecomposition) -> f64 {
    let d = a.nrows();
    let mut worst: f64 = 0.0;
    let mut sum = DMatrix::<C>::zeros(d, d);
    for s in &j.subspaces {
        for v in s.basis() {
            sum += v * v.adjoint();
        }
        if let Some(v1) = &s.v1 {
            worst = worst.max((a * v1 - v1).norm());
        }
        if let Some(v0) = &s.v0 {
            worst = worst.max((a * v0).norm());
        }
        if let Some(w1) = &s.w1 {
            worst = worst.max((b * w1 - w1).norm());
        }
        if let Some(w0) = &s.w0 {
            worst = worst.max((b * w0).norm());
        }
        if s.dim == 2 {
            let (v1, w1, w0) = (s.v1.as_ref().unwrap(), s.w1.as_ref().unwrap(), s.w0.as_ref().unwrap());
            let rhs = w1 * c(s.p.sqrt()) + w0 * c((1.0 - s.p).sqrt());
            worst = worst.max((v1 - rhs).norm());
            worst = worst.max((v1.dotc(w1).norm_sqr() - s.p).abs());
            assert!(s.p > 0.0 && s.p < 1.0);
        }
    }
    worst.max((sum - DMatrix::identity(d, d)).norm())
}

/// Nonzero spectrum of `ABA` is the set of `p` over subspaces meeting img A.
fn spectrum_matches(a: &DMatrix<C>, b: &DMatrix<C>, j: &JordanDecomposition) {
    let mut eig: Vec<f64> = (a * b * a).symmetric_eigen().eigenvalues.iter().copied().filter(|&x| x > 1e-9).collect();
    let mut ps: Vec<f64> = j.subspaces.iter().filter(|s| s.v1.is_some() && s.p > 1e-9).map(|s| s.p).collect();
    eig.sort_by(f64::total_cmp);
    ps.sort_by(f64::total_cmp);
    assert_eq!(eig.len(), ps.len());
    for (x, y) in eig.iter().zip(&ps) {
        assert!((x - y).abs() < 1e-8);
    }
}

#[test]
fn jordan_on_random_pairs() {
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    for _ in 0..40 {
        let d = rand::Rng::random_range(&mut rng, 2..=20);
        let (ra, rb) = (rand::Rng::random_range(&mut rng, 0..=d), rand::Rng::random_range(&mut rng, 0..=d));
        let a = random_projector(d, ra, &mut rng);
        let b = random_projector(d, rb, &mut rng);
        let j = jordan_decompose(&StructuredProjector::Dense(a.clone()), &StructuredProjector::Dense(b.clone()), 1e-8).unwrap();
        assert!(audit(&a, &b, &j) < 1e-8);
        assert!(j.residuals.max() < 1e-8);
        spectrum_matches(&a, &b, &j);
    }
}

#[test]
fn jordan_with_shared_subspaces() {
    // A and B share a 2-dim subspace and each has a private direction.
    let d = 6;
    let e = |i: usize| DVector::<C>::from_fn(d, |k, _| c((k == i) as u8 as f64));
    let h = (e(3) + e(4)) * c(std::f64::consts::FRAC_1_SQRT_2);
    let cols_a = DMatrix::from_columns(&[e(0), e(1), e(3)]);
    let cols_b = DMatrix::from_columns(&[e(0), e(1), h]);
    let a = &cols_a * cols_a.adjoint();
    let b = &cols_b * cols_b.adjoint();
    let j = jordan_decompose(&StructuredProjector::Dense(a.clone()), &StructuredProjector::Dense(b.clone()), 1e-8).unwrap();
    assert!(audit(&a, &b, &j) < 1e-10);
    let ones = j.subspaces.iter().filter(|s| s.p == 1.0 && s.v1.is_some()).count();
    assert_eq!(ones, 2);
    let half: Vec<_> = j.subspaces.iter().filter(|s| s.dim == 2).collect();
    assert_eq!(half.len(), 1);
    assert!((half[0].p - 0.5).abs() < 1e-12);
    // Weights of any state sum to one.
    let psi = StateVector::random(d, &mut ChaCha20Rng::seed_from_u64(0));
    assert!((j.weights(&psi.amps).iter().sum::<f64>() - 1.0).abs() < 1e-10);
}

/// Exact law of `alternating_outcomes` from `ψ ∈ img B`, as a function of the
/// Jordan weights: repeats have probability `p`, switches `1 − p`.
fn law(weights: &[(f64, f64)], bits: &[bool]) -> f64 {
    weights
        .iter()
        .map(|&(w, p)| {
            let mut prev = true;
            let mut pr = w;
            for &b in bits {
                pr *= if b == prev { p } else { 1.0 - p };
                prev = b;
            }
            pr
        })
        .sum()
}

#[test]
fn alternating_outcomes_follow_the_law() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let d = 6;
    let a = StructuredProjector::Dense(random_projector(d, 3, &mut rng));
    let bm = random_projector(d, 2, &mut rng);
    let b = StructuredProjector::Dense(bm.clone());
    let j = jordan_decompose(&a, &b, 1e-8).unwrap();
    let psi = StateVector::from_unnormalized(&bm * StateVector::random(d, &mut rng).amps).unwrap();
    let ws: Vec<(f64, f64)> = j
        .subspaces
        .iter()
        .zip(j.weights(&psi.amps))
        .filter(|(_, w)| *w > 1e-12)
        .map(|(s, w)| (w, s.p))
        .collect();
    let t = 4;
    let trials = 4000;
    let mut counts = vec![0u64; 1 << t];
    for _ in 0..trials {
        let (bits, post) = alternating_outcomes(&a, &b, &psi, t, &mut rng).unwrap();
        assert!((post.norm() - 1.0).abs() < 1e-9);
        counts[bits.iter().fold(0, |acc, &x| acc * 2 + x as usize)] += 1;
    }
    let probs: Vec<f64> = (0..1 << t)
        .map(|i| law(&ws, &(0..t).map(|k| (i >> (t - 1 - k)) & 1 == 1).collect::<Vec<_>>()))
        .collect();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let (_, _, pval) = chi2_gof(&counts, &probs);
    assert!(pval > 1e-3, "p-value {pval}");
}

#[test]
fn alternating_requires_img_b() {
    let a = StructuredProjector::basis_state(2, 0);
    let b = StructuredProjector::basis_state(2, 1);
    let psi = StateVector::basis(2, 0);
    assert!(alternating_outcomes(&a, &b, &psi, 3, &mut ChaCha20Rng::seed_from_u64(0)).is_err());
}

#[test]
fn mwdist_matches_its_law() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let (p, t, n) = (0.7, 3, 8000);
    let mut counts = vec![0u64; 8];
    for _ in 0..n {
        let b = mwdist_sample(p, t, &mut rng);
        counts[b.iter().fold(0, |acc, &x| acc * 2 + x as usize)] += 1;
    }
    let probs: Vec<f64> = (0..8)
        .map(|i| law(&[(1.0, p)], &(0..t).map(|k| (i >> (t - 1 - k)) & 1 == 1).collect::<Vec<_>>()))
        .collect();
    let (_, _, pval) = chi2_gof(&counts, &probs);
    assert!(pval > 1e-3, "p-value {pval}");
    assert_eq!(mwdist_sample(1.0, 5, &mut rng), vec![true; 5]);
    assert_eq!(mwdist_sample(0.0, 4, &mut rng), vec![false, true, false, true]);
    assert_eq!(nreps(&[true, false, false]), 0.5);
}

#[test]
fn binomial_masses_match_statrs() {
    for &(n, p) in &[(10u64, 0.3), (200, 0.5), (5000, 0.01), (16384, 0.77)] {
        let bin = Binomial::new(p, n).unwrap();
        for &(lo, hi) in &[(0, n / 4), (n / 4, n / 2), (n / 3, n)] {
            let want = bin.cdf(hi) - if lo == 0 { 0.0 } else { bin.cdf(lo - 1) };
            assert!((binomial::mass(n, p, lo, hi) - want).abs() < 1e-9, "n={n} p={p} [{lo},{hi}]");
            assert!((binomial::mass_outside(n, p, lo, hi) - (1.0 - want)).abs() < 1e-9);
        }
        assert!((binomial::pmf(n, n / 2, p) - bin.pmf(n / 2)).abs() < 1e-12);
    }
}

#[test]
fn truncated_sampling_stays_inside() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for _ in 0..200 {
        let k = binomial::sample_in(1000, 0.4, 380, 420, &mut rng).unwrap();
        assert!((380..=420).contains(&k));
        let k = binomial::sample_outside(1000, 0.4, 380, 420, &mut rng).unwrap();
        assert!(!(380..=420).contains(&k));
    }
    assert_eq!(binomial::sample_in(10, 0.0, 3, 5, &mut rng), None);
}

#[test]
fn density_dephasing_and_gentle_measurement() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for _ in 0..20 {
        let d = 8;
        let pm = random_projector(d, 5, &mut rng);
        let psi = StateVector::random(d, &mut rng);
        let rho = DensityOp::from_pure(&psi).unwrap();
        let deph = rho.dephase(&pm);
        assert!((deph.trace() - 1.0).abs() < 1e-10);
        deph.validate().unwrap();
        assert!((deph.probability(&pm) - rho.probability(&pm)).abs() < 1e-10);
        let (delta, dist) = gentle_check(&StructuredProjector::Dense(pm), &rho).unwrap();
        assert!(dist <= 2.0 * delta.sqrt() + 1e-9);
    }
    let a = DensityOp::from_pure(&StateVector::basis(2, 0)).unwrap();
    let b = DensityOp::from_pure(&StateVector::basis(2, 1)).unwrap();
    assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-12);
    assert!(trace_distance(&a, &a) < 1e-12);
    let mix = DensityOp::mixture(&[(0.5, StateVector::basis(2, 0)), (0.5, StateVector::basis(2, 1))]).unwrap();
    assert!((trace_distance(&a, &mix) - 0.5).abs() < 1e-12);
}

#[test]
fn unitaries_compose_and_invert() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let u = random_unitary(3, &mut rng);
    let local = UnitaryOp::Local { left: 2, op: Box::new(UnitaryOp::Dense(u.clone())), right: 2 };
    let want = DMatrix::<C>::identity(2, 2).kronecker(&u.kronecker(&DMatrix::identity(2, 2)));
    assert!((local.to_dense().unwrap() - want).norm() < 1e-12);
    let seq = UnitaryOp::Sequence(vec![
        local.clone(),
        UnitaryOp::Permutation((0..12).map(|i| (i * 5) % 12).collect()),
        UnitaryOp::Phases((0..12).map(|i| C::from_polar(1.0, i as f64)).collect()),
    ]);
    let v = StateVector::random(12, &mut rng).amps;
    assert!((seq.apply_adjoint(&seq.apply(&v)) - &v).norm() < 1e-12);
    assert!((seq.adjoint().apply(&seq.apply(&v)) - &v).norm() < 1e-12);
    assert!(seq.unitarity_residual(4, &mut rng) < 1e-12);
    let a = StateVector::random(4, &mut rng).amps;
    let mut b = StateVector::random(4, &mut rng).amps;
    // Make the overlap real.
    let ph = a.dotc(&b);
    b *= C::from_polar(1.0, -ph.arg());
    let r = UnitaryOp::swap_reflection(&a, &b).unwrap();
    assert!((r.apply(&a) - &b).norm() < 1e-12);
}

#[test]
fn projector_forms_agree() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let u = Arc::new(UnitaryOp::Dense(random_unitary(4, &mut rng)));
    let inner = StructuredProjector::basis_state(4, 1);
    let conj = StructuredProjector::conjugated(u.clone(), inner.clone());
    let ud = u.to_dense().unwrap();
    let want = ud.adjoint() * inner.to_dense().unwrap() * &ud;
    assert!((conj.to_dense().unwrap() - &want).norm() < 1e-12);
    let comp = conj.clone().complement();
    assert!((comp.to_dense().unwrap() + want - DMatrix::identity(4, 4)).norm() < 1e-12);
    let (idem, herm) = conj.residuals(4, &mut rng);
    assert!(idem < 1e-12 && herm < 1e-12);
    let ctl = StructuredProjector::Controlled(vec![StructuredProjector::zero(4), conj.clone()]);
    let psi = StateVector::random(8, &mut rng);
    let direct: f64 = conj.probability(&psi.amps.rows(4, 4).into_owned());
    assert!((ctl.probability(&psi.amps) - direct).abs() < 1e-12);
}

#[test]
fn measurement_post_states() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let psi = StateVector::random(4, &mut rng);
    let pi = StructuredProjector::predicate(4, |i| i < 2);
    let (b, post) = measure_binary(&pi, &psi, &mut rng).unwrap();
    assert!((post.norm() - 1.0).abs() < 1e-12);
    assert!((pi.probability(&post.amps) - if b { 1.0 } else { 0.0 }).abs() < 1e-12);
    assert!(measure_binary(&pi, &StateVector::basis(3, 0), &mut rng).is_err());
    let fam = vec![StructuredProjector::identity(4), StructuredProjector::identity(4)];
    let (r, b, _) = mixm(&fam, &psi, &mut rng).unwrap();
    assert!(r < 2 && b);
    assert!(StateVector::new(DVector::from_element(2, c(1.0))).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn layout_digits_round_trip(dims in proptest::collection::vec(1usize..6, 1..5), idx in any::<usize>()) {
        let l = RegisterLayout::new(dims.iter().enumerate().map(|(i, &d)| (format!("r{i}"), d)).collect()).unwrap();
        let i = idx % l.dim();
        prop_assert_eq!(l.index(&l.digits(i)), i);
    }

    #[test]
    fn jordan_invariants(seed in any::<u64>(), d in 1usize..=12) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let ra = rand::Rng::random_range(&mut rng, 0..=d);
        let rb = rand::Rng::random_range(&mut rng, 0..=d);
        let a = random_projector(d, ra, &mut rng);
        let b = random_projector(d, rb, &mut rng);
        let j = jordan_decompose(&StructuredProjector::Dense(a.clone()), &StructuredProjector::Dense(b.clone()), 1e-8).unwrap();
        prop_assert!(audit(&a, &b, &j) < 1e-8);
        prop_assert_eq!(j.subspaces.iter().map(|s| s.dim).sum::<usize>(), d);
    }
}
