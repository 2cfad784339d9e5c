//! Conservation, symmetry and contraction properties of the stepping schemes.

mod common;

use kdv_core::spectral::l2_norm;
use kdv_core::{
    l2_distance, scheme_imr, scheme_yoshida, stability_guard, CompositionScheme, DriftTracker, EquationSpec, FluxMode,
    GuardMode, InitialData, Integrator, Rhs, SpectralField, StepperConfig,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::smooth_random_field;

fn integrator(scheme: CompositionScheme, spec: EquationSpec, modes: usize, k: f64) -> Integrator {
    Integrator::new(scheme, Rhs::new(spec, modes).unwrap(), StepperConfig::new(k)).unwrap()
}

fn schemes() -> Vec<CompositionScheme> {
    vec![
        scheme_imr(),
        scheme_yoshida(4).unwrap(),
        scheme_yoshida(6).unwrap(),
        scheme_yoshida(8).unwrap(),
    ]
}

fn small_state(seed: &[f64], modes: usize, amp: f64) -> SpectralField {
    let nonneg: Vec<Complex64> = (0..=modes)
        .map(|j| Complex64::new(seed[2 * j], seed[2 * j + 1]) * (amp / (1.0 + j as f64).powi(3)))
        .collect();
    SpectralField::from_nonnegative(&nonneg).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_and_mean_are_conserved(
        seed in proptest::collection::vec(-1.0f64..1.0, 34),
        scheme_idx in 0usize..4,
        spec_idx in 0usize..3,
        steps in 1usize..6,
    ) {
        let spec = [
            EquationSpec::kdv(),
            EquationSpec::new(1.0, 2, 1.0, 1, 2).unwrap(),
            EquationSpec::new(1.0, 1, 0.5, 0, 3).unwrap(),
        ][spec_idx];
        let scheme = schemes().swap_remove(scheme_idx);
        let stages = scheme.stages();
        let it = integrator(scheme, spec, 16, 2e-3);
        let u0 = small_state(&seed, 16, 1.0);
        let norm0 = l2_norm(&u0);
        let mut u = u0.clone();
        for _ in 0..steps {
            u = it.step(&u).unwrap().state;
            prop_assert_eq!(u.coeff(0), u0.coeff(0));
            let bound = 50.0 * it.config().fp_tol * norm0 * (stages * steps) as f64;
            prop_assert!((l2_norm(&u) - norm0).abs() <= bound);
        }
    }
}

#[test]
fn linear_flow_is_unitary_mode_by_mode() {
    let mut rng = StdRng::seed_from_u64(11);
    for scheme in schemes() {
        let rhs = Rhs::with_mode(EquationSpec::kdv(), 32, FluxMode::LinearOnly).unwrap();
        let it = Integrator::new(scheme, rhs, StepperConfig::new(5e-3)).unwrap();
        let mut u = smooth_random_field(&mut rng, 32, 0.0);
        for _ in 0..10 {
            let next = it.step(&u).unwrap().state;
            for j in 0..=32 {
                let before = u.coeff(j).norm();
                assert!((next.coeff(j).norm() - before).abs() <= 1e-14 * before.max(1.0));
            }
            u = next;
        }
    }
}

#[test]
fn linear_evolution_is_the_cayley_product() {
    let spec = EquationSpec::new(1.0, 1, 0.3, 0, 1).unwrap();
    let scheme = scheme_yoshida(4).unwrap();
    let rhs = Rhs::with_mode(spec, 12, FluxMode::LinearOnly).unwrap();
    let k = 1e-2;
    let it = Integrator::new(scheme.clone(), rhs.clone(), StepperConfig::new(k)).unwrap();
    let u0 = InitialData::GaussianPeriodic { amplitude: 1.0, center: 0.5, width: 0.7 }.project(12);
    let end = it.evolve(&u0, 0.5, 10, |_| {}).unwrap();
    let one = Complex64::new(1.0, 0.0);
    for j in 0..=12i64 {
        let lambda = rhs.multipliers().get(j);
        let per_step: Complex64 = scheme
            .b()
            .iter()
            .map(|b| (one + lambda * (0.5 * k * b)) / (one - lambda * (0.5 * k * b)))
            .product();
        let expected = u0.coeff(j) * per_step.powu(50);
        assert!((end.coeff(j) - expected).norm() <= 1e-13, "j={j}");
    }
}

#[test]
fn observed_contraction_is_below_twice_the_guard() {
    let mut rng = StdRng::seed_from_u64(12);
    let mut checked = 0;
    for trial in 0..60 {
        let modes = [8usize, 16, 32, 64][trial % 4];
        let k = [1e-4, 5e-4, 1e-3, 2e-3][trial % 4 * 7 % 4];
        let scheme = schemes().swap_remove(trial % 3);
        let it = integrator(scheme.clone(), EquationSpec::kdv(), modes, k);
        let u = smooth_random_field(&mut rng, modes, 2.0).scale(0.5);
        let sup = kdv_core::spectral::sup_on_grid(&u, 4 * modes).unwrap();
        let gamma = stability_guard(it.config(), modes, &scheme, sup);
        if gamma >= 0.5 {
            continue;
        }
        let out = it.step(&u).unwrap();
        for t in &out.traces {
            assert!(t.gamma_estimate <= 2.0 * gamma, "observed {} vs guard {gamma}", t.gamma_estimate);
        }
        checked += 1;
    }
    assert!(checked >= 40);
}

#[test]
fn self_convergence_at_tenth_step() {
    let u0 = InitialData::cosine(1.0).project(64);
    let coarse = integrator(scheme_yoshida(4).unwrap(), EquationSpec::kdv(), 64, 1e-3);
    let fine = integrator(scheme_yoshida(4).unwrap(), EquationSpec::kdv(), 64, 1e-4);
    let a = coarse.evolve(&u0, 1.0, 100, |_| {}).unwrap();
    let b = fine.evolve(&u0, 1.0, 1000, |_| {}).unwrap();
    assert!(l2_distance(&a, &b) <= 1e-8);
}

#[test]
fn single_step_drift_is_at_solver_tolerance() {
    let it = integrator(scheme_yoshida(4).unwrap(), EquationSpec::kdv(), 64, 1e-3);
    let u0 = InitialData::cosine(1.0).project(64);
    let mut tracker = DriftTracker::new(EquationSpec::kdv());
    it.evolve(&u0, 1e-3, 1, |o| tracker.observe(o.t, o.state).unwrap()).unwrap();
    let r = tracker.report().unwrap();
    assert_eq!(r.observations, 2);
    assert!(r.l2_drift <= 1e-12 * l2_norm(&u0));
    assert_eq!(r.i1.max_abs, 0.0);
}

#[test]
fn long_run_invariants_with_gaussian_data() {
    let it = integrator(scheme_yoshida(4).unwrap(), EquationSpec::kdv(), 48, 2e-3);
    let u0 = InitialData::GaussianPeriodic { amplitude: 0.8, center: 0.0, width: 0.6 }.project(48);
    let mut tracker = DriftTracker::new(EquationSpec::kdv());
    it.evolve(&u0, 2.0, 5, |o| tracker.observe(o.t, o.state).unwrap()).unwrap();
    let r = tracker.report().unwrap();
    assert!(r.i1.max_abs <= 1e-13);
    assert!(r.i2.max_abs <= 1e-11 * u0.coeff_energy() * 2.0 * std::f64::consts::PI);
    assert!(r.i3.unwrap().max_abs < 1e-4);
}

#[test]
fn guard_modes() {
    let u = InitialData::cosine(1.0).project(32);
    let mut cfg = StepperConfig::new(0.05);
    for (mode, expect_guard) in [(GuardMode::Warn, true), (GuardMode::Off, false)] {
        cfg.guard_mode = mode;
        let it = Integrator::new(scheme_imr(), Rhs::new(EquationSpec::kdv(), 32).unwrap(), cfg).unwrap();
        let out = it.step(&u).unwrap();
        assert_eq!(out.guard.is_some(), expect_guard);
    }
    cfg.guard_mode = GuardMode::Reject;
    let it = Integrator::new(scheme_imr(), Rhs::new(EquationSpec::kdv(), 32).unwrap(), cfg).unwrap();
    let err = it.step(&u).unwrap_err();
    assert!(err.to_string().contains("Gamma"));
}
