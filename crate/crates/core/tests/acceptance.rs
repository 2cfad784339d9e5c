//! Acceptance suite. Each test checks one exit criterion and prints a single
//! `criterion <id>: PASS|FAIL ...` line; run with `--nocapture` to see them.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use kdv_core::spectral::{galerkin_product, inner_product, l2_norm, SpectralField};
use kdv_core::{
    apply_f, linear_fit, local_error_study, scheme_imr, scheme_yoshida, spatial_study, temporal_study, DriftTracker,
    EquationSpec, FitStatus, InitialData, Integrator, Problem, Rhs, StepperConfig, StudyReport,
};
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::{convolution_oracle, random_field, smooth_random_field};

const N: usize = 64;
const T: f64 = 1.0;

fn report(id: &str, pass: bool, detail: String) {
    println!("criterion {id}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn kdv_problem() -> Problem {
    Problem::new(EquationSpec::kdv())
}

fn cos_x(modes: usize) -> SpectralField {
    InitialData::cosine(1.0).project(modes)
}

fn describe(rep: &StudyReport) -> String {
    let pts: Vec<String> = rep
        .points
        .iter()
        .map(|p| format!("{:.2e}:{:.3e}{}", p.param, p.error, if p.excluded { "(floor)" } else { "" }))
        .collect();
    format!("order={:?} pts=[{}]", rep.estimated_order, pts.join(", "))
}

fn order_within(rep: &StudyReport, lo: f64, hi: f64) -> bool {
    rep.status == FitStatus::Fitted && rep.estimated_order.is_some_and(|p| (lo..=hi).contains(&p))
}

fn yoshida4_temporal() -> &'static StudyReport {
    static REPORT: OnceLock<StudyReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        temporal_study(
            &kdv_problem(),
            &cos_x(N),
            &scheme_yoshida(4).unwrap(),
            T,
            &[4e-3, 2e-3, 1e-3, 5e-4],
        )
        .expect("yoshida4 temporal study")
    })
}

#[test]
fn criterion_01_temporal_order_yoshida4() {
    let start = Instant::now();
    let rep = yoshida4_temporal();
    report(
        "1",
        order_within(rep, 3.6, 4.4),
        format!("{} ({:.1}s)", describe(rep), start.elapsed().as_secs_f64()),
    );
}

#[test]
fn criterion_02_temporal_order_imr() {
    let start = Instant::now();
    let rep = temporal_study(&kdv_problem(), &cos_x(N), &scheme_imr(), T, &[4e-3, 2e-3, 1e-3, 5e-4]).unwrap();
    report(
        "2",
        order_within(&rep, 1.8, 2.2),
        format!("{} ({:.1}s)", describe(&rep), start.elapsed().as_secs_f64()),
    );
}

#[test]
fn criterion_03_temporal_order_yoshida6() {
    let start = Instant::now();
    let rep = temporal_study(&kdv_problem(), &cos_x(N), &scheme_yoshida(6).unwrap(), T, &[8e-3, 4e-3, 2e-3]).unwrap();
    report(
        "3",
        order_within(&rep, 5.3, 6.7),
        format!("{} ({:.1}s)", describe(&rep), start.elapsed().as_secs_f64()),
    );
}

#[test]
fn criterion_04_local_error_exponent() {
    let start = Instant::now();
    let ks = [2e-2, 1e-2, 5e-3, 2.5e-3];
    let y4 = local_error_study(&kdv_problem(), &cos_x(N), &scheme_yoshida(4).unwrap(), &ks).unwrap();
    let imr = local_error_study(&kdv_problem(), &cos_x(N), &scheme_imr(), &ks).unwrap();
    report(
        "4",
        order_within(&y4, 4.5, 5.5) && order_within(&imr, 2.6, 3.4),
        format!(
            "yoshida4 {} | imr {} ({:.1}s)",
            describe(&y4),
            describe(&imr),
            start.elapsed().as_secs_f64()
        ),
    );
}

struct ConservationRun {
    max_rel_l2: f64,
    max_mass: f64,
}

fn conservation_run() -> &'static ConservationRun {
    static RUN: OnceLock<ConservationRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let k = 1e-3;
        let it = Integrator::new(
            scheme_yoshida(4).unwrap(),
            Rhs::new(EquationSpec::kdv(), N).unwrap(),
            StepperConfig::new(k),
        )
        .unwrap();
        let u0 = cos_x(N);
        let norm0 = l2_norm(&u0);
        let mean0 = u0.coeff(0).re;
        let mut max_rel_l2 = 0.0f64;
        let mut max_mass = 0.0f64;
        it.evolve(&u0, 1000.0 * k, 1, |o| {
            max_rel_l2 = max_rel_l2.max((l2_norm(o.state) - norm0).abs() / norm0);
            max_mass = max_mass.max((o.state.coeff(0).re - mean0).abs());
        })
        .unwrap();
        ConservationRun { max_rel_l2, max_mass }
    })
}

#[test]
fn criterion_05_l2_conservation() {
    let start = Instant::now();
    let run = conservation_run();
    report(
        "5",
        run.max_rel_l2 <= 1e-11,
        format!(
            "max relative L2 drift {:.3e} over 1000 steps ({:.1}s)",
            run.max_rel_l2,
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_06_mass_conservation() {
    let run = conservation_run();
    report(
        "6",
        run.max_mass <= 1e-14,
        format!("max coefficient-0 drift {:.3e}", run.max_mass),
    );
}

#[test]
fn criterion_07_hamiltonian_non_secular() {
    let start = Instant::now();
    let k = 1e-2;
    let it = Integrator::new(
        scheme_yoshida(4).unwrap(),
        Rhs::new(EquationSpec::kdv(), N).unwrap(),
        StepperConfig::new(k),
    )
    .unwrap();
    let mut short = DriftTracker::new(EquationSpec::kdv());
    let mut long = DriftTracker::new(EquationSpec::kdv());
    it.evolve(&cos_x(N), 10.0, 1, |o| {
        if o.t <= 1.0 + 1e-9 {
            short.observe(o.t, o.state).unwrap();
        }
        long.observe(o.t, o.state).unwrap();
    })
    .unwrap();
    let d1 = short.report().unwrap().i3.unwrap().max_abs;
    let d10 = long.report().unwrap().i3.unwrap().max_abs;
    report(
        "7",
        d10.is_finite() && d10 <= 3.0 * d1,
        format!(
            "i3 drift T=1 {d1:.3e}, T=10 {d10:.3e}, ratio {:.2} ({:.1}s)",
            d10 / d1,
            start.elapsed().as_secs_f64()
        ),
    );
}

/// Smooth random fields (amplitudes decaying like `(1+|j|)^-4`) are checked
/// against `1e-12·‖v‖²`. Flat random spectra are checked against the round-off
/// scale `1e-13·‖F(v)‖·‖v‖`, since `|λ_N|` reaches `N^{2m+1}`.
#[test]
fn criterion_08_orthogonality() {
    let start = Instant::now();
    let specs = [
        EquationSpec::kdv(),
        EquationSpec::new(1.0, 2, 1.0, 1, 2).unwrap(),
        EquationSpec::new(0.5, 1, 2.0, 0, 3).unwrap(),
        EquationSpec::new(1.0, 1, 1.0, 0, 1).unwrap(),
    ];
    let mut rng = StdRng::seed_from_u64(8);
    let mut worst_smooth = 0.0f64;
    let mut worst_flat = 0.0f64;
    for trial in 0..1000 {
        let modes = [1, 2, 5, 8, 16, 31, 32, 48, 64][trial % 9];
        let spec = specs[trial % specs.len()];

        let v = smooth_random_field(&mut rng, modes, 4.0);
        let fv = apply_f(&v, &spec).unwrap();
        worst_smooth = worst_smooth.max(inner_product(&fv, &v).norm() / l2_norm(&v).powi(2));

        let w = random_field(&mut rng, modes);
        let fw = apply_f(&w, &spec).unwrap();
        worst_flat = worst_flat.max(inner_product(&fw, &w).norm() / (l2_norm(&fw) * l2_norm(&w)));
    }
    report(
        "8",
        worst_smooth <= 1e-12 && worst_flat <= 1e-13,
        format!(
            "smooth max |<F(v),v>|/|v|^2 = {worst_smooth:.3e}; flat max |<F(v),v>|/(|F(v)||v|) = {worst_flat:.3e} ({:.2}s)",
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_09_product_oracle() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for trial in 0..200 {
        let modes = 1 + trial % 16;
        let a = random_field(&mut rng, modes);
        let b = random_field(&mut rng, modes);
        let fast = galerkin_product(&a, &b).unwrap();
        let slow = convolution_oracle(&[&a, &b], modes);
        for (j, c) in fast.iter() {
            worst = worst.max((c - slow[(j + modes as i64) as usize]).norm());
        }
    }
    report(
        "9",
        worst <= 1e-13,
        format!("max coefficient error {worst:.3e} ({:.2}s)", start.elapsed().as_secs_f64()),
    );
}

#[test]
fn criterion_10_coefficient_identities() {
    let mut ok = true;
    let mut detail = Vec::new();
    for (order, stages) in [(4u32, 3usize), (6, 9), (8, 27)] {
        let s = scheme_yoshida(order).unwrap();
        let sum_err = (s.power_sum(1) - 1.0).abs();
        let odd_err = (3..order as i32).step_by(2).map(|j| s.power_sum(j).abs()).fold(0.0, f64::max);
        ok &= s.stages() == stages && sum_err <= 1e-14 && odd_err <= 1e-12;
        detail.push(format!(
            "order {order}: s={} |sum b-1|={sum_err:.1e} max|sum b^odd|={odd_err:.1e}",
            s.stages()
        ));
    }
    report("10", ok, detail.join("; "));
}

#[test]
fn criterion_11_time_symmetry() {
    let cfg = StepperConfig::new(1e-2);
    let it = Integrator::new(scheme_yoshida(4).unwrap(), Rhs::new(EquationSpec::kdv(), N).unwrap(), cfg).unwrap();
    let u0 = cos_x(N);
    let forward = it.step_by(&u0, cfg.k).unwrap().state;
    let back = it.step_by(&forward, -cfg.k).unwrap().state;
    let dist = l2_norm(&(&back - &u0));
    let bound = 100.0 * cfg.fp_tol * l2_norm(&u0);
    report("11", dist <= bound, format!("|step(-k)step(k)U - U| = {dist:.3e} (bound {bound:.1e})"));
}

#[test]
fn criterion_12_spatial_accuracy() {
    let start = Instant::now();
    let rep = spatial_study(
        &kdv_problem(),
        &InitialData::cosine(1.0),
        &scheme_yoshida(4).unwrap(),
        1e-3,
        &[8, 16, 24, 32],
        T,
        Some(128),
    )
    .unwrap();
    // Errors below the harness round-off floor are clamped to it: strict
    // decrease is required only while the error is resolvable.
    let floor = rep.floor;
    let errs: Vec<f64> = rep.points.iter().map(|p| p.error).collect();
    let clamped: Vec<f64> = errs.iter().map(|e| e.max(floor)).collect();
    let monotone = clamped.windows(2).all(|w| w[1] < w[0] || (w[0] == floor && w[1] == floor));
    let at32 = errs[errs.len() - 1];
    report(
        "12",
        monotone && at32 < 1e-9,
        format!(
            "errors {:?} floor {floor:.1e} monotone={monotone} ({:.1}s)",
            errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>(),
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_13_generalized_benjamin_run() {
    let start = Instant::now();
    let spec = EquationSpec::new(1.0, 2, 1.0, 1, 2).unwrap();
    let it = Integrator::new(scheme_yoshida(4).unwrap(), Rhs::new(spec, N).unwrap(), StepperConfig::new(1e-3)).unwrap();
    let u0 = InitialData::cosine(0.1).project(N);
    let mut tracker = DriftTracker::new(spec);
    it.evolve(&u0, T, 1, |o| tracker.observe(o.t, o.state).unwrap()).unwrap();
    let r = tracker.report().unwrap();
    let rel = r.relative_l2_drift();
    report(
        "13",
        rel <= 1e-11 && r.i1.max_abs / (2.0 * std::f64::consts::PI) <= 1e-14,
        format!(
            "relative L2 drift {rel:.3e}, mass drift {:.3e} ({:.1}s)",
            r.i1.max_abs / (2.0 * std::f64::consts::PI),
            start.elapsed().as_secs_f64()
        ),
    );
}

/// Stage iteration counts across the yoshida4 temporal-study step sizes must be
/// described by `a·|log k| + b` to within one iteration, with every stage
/// converged (a failed stage aborts the study).
#[test]
fn criterion_14_iteration_telemetry() {
    let rep = yoshida4_temporal();
    let xs: Vec<f64> = rep.points.iter().map(|p| p.param.ln().abs()).collect();
    let ys: Vec<f64> = rep.points.iter().map(|p| p.max_stage_iterations as f64).collect();
    let (a, b) = linear_fit(&xs, &ys).unwrap();
    let worst = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - (a * x + b))
        .fold(f64::NEG_INFINITY, f64::max);
    let bounded = ys.iter().all(|&y| y < StepperConfig::DEFAULT_FP_MAX_ITER as f64);
    report(
        "14",
        worst <= 1.0 && bounded,
        format!("max iterations {ys:?}, fit a={a:.3} b={b:.3}, worst excess {worst:.3}"),
    );
}
