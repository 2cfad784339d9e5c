//! Convergence studies: global temporal order by self-convergence, one-step
//! local error, and spatial accuracy against a finer grid.
//!
//! Every study point is an independent run; points execute in parallel and the
//! report is assembled in parameter order, so results do not depend on
//! scheduling.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::diagnostics::l2_distance;
use crate::initial::InitialData;
use crate::integrators::{scheme_yoshida, CompositionScheme, EvolveError, Integrator, StepError, StepperConfig};
use crate::operators::{EquationSpec, FluxMode, OperatorError, Rhs};
use crate::spectral::{l2_norm, SpectralField};

/// Points with error below `FLOOR_FACTOR·ε·‖reference‖` are excluded from fits.
pub const FLOOR_FACTOR: f64 = 1e3;

/// Reference runs use this many times finer steps than the smallest study step.
pub const TEMPORAL_REFINEMENT: f64 = 10.0;

/// Substeps per study step for the local-error reference.
pub const LOCAL_REFINEMENT: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("a study needs at least 2 points (got {0})")]
    InsufficientPoints(usize),
    #[error("study parameters must be strictly {0}")]
    Ordering(&'static str),
    #[error("parameters must be positive and finite")]
    Parameter,
    #[error("log-log fit is degenerate: abscissae are not distinct")]
    DegenerateAbscissae,
    #[error("reference degree {n_ref} must exceed every study degree (max {max})")]
    ReferenceDegree { n_ref: usize, max: usize },
    #[error("run with {param_name} = {param}: {source}")]
    Run {
        param_name: &'static str,
        param: f64,
        #[source]
        source: EvolveError,
    },
    #[error(transparent)]
    Setup(#[from] StepError),
}

impl From<OperatorError> for HarnessError {
    fn from(e: OperatorError) -> Self {
        HarnessError::Setup(StepError::Operator(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Temporal,
    Spatial,
    Local,
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::Temporal => "temporal",
            StudyKind::Spatial => "spatial",
            StudyKind::Local => "local",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "temporal" => Some(StudyKind::Temporal),
            "spatial" => Some(StudyKind::Spatial),
            "local" => Some(StudyKind::Local),
            _ => None,
        }
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyPoint {
    /// Step size `k` or degree `N`.
    pub param: f64,
    pub error: f64,
    /// Below the round-off floor and left out of the fit.
    pub excluded: bool,
    /// Largest stage iteration count over the run.
    pub max_stage_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Fitted,
    /// Fewer than two points above the round-off floor.
    FloorLimited,
    /// The reference itself vanishes (e.g. zero data).
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub kind: StudyKind,
    /// Sorted by increasing parameter.
    pub points: Vec<StudyPoint>,
    pub estimated_order: Option<f64>,
    pub status: FitStatus,
    pub reference_descriptor: String,
    /// Round-off floor below which points were excluded.
    pub floor: f64,
}

impl StudyReport {
    pub fn points_used(&self) -> usize {
        self.points.iter().filter(|p| !p.excluded).count()
    }

    fn assemble(
        kind: StudyKind,
        mut points: Vec<StudyPoint>,
        reference_norm: f64,
        descriptor: String,
        fit: impl Fn(&[(f64, f64)]) -> Result<f64, HarnessError>,
    ) -> Result<Self, HarnessError> {
        let floor = FLOOR_FACTOR * f64::EPSILON * reference_norm;
        for p in &mut points {
            p.excluded = p.error.is_nan() || p.error <= floor || p.error == 0.0;
        }
        points.sort_by(|a, b| a.param.total_cmp(&b.param));
        let used: Vec<(f64, f64)> = points.iter().filter(|p| !p.excluded).map(|p| (p.param, p.error)).collect();
        let (status, estimated_order) = if reference_norm == 0.0 && points.iter().all(|p| p.error == 0.0) {
            (FitStatus::Degenerate, None)
        } else if used.len() < 2 {
            (FitStatus::FloorLimited, None)
        } else {
            (FitStatus::Fitted, Some(fit(&used)?))
        };
        Ok(Self {
            kind,
            points,
            estimated_order,
            status,
            reference_descriptor: descriptor,
            floor,
        })
    }
}

/// Least-squares line `y = slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), HarnessError> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(HarnessError::InsufficientPoints(xs.len().min(ys.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx.is_nan() || sxx <= 1e-300 {
        return Err(HarnessError::DegenerateAbscissae);
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Slope of `log(error)` against `log(param)`.
pub fn estimate_order(points: &[(f64, f64)]) -> Result<f64, HarnessError> {
    if points.len() < 2 {
        return Err(HarnessError::InsufficientPoints(points.len()));
    }
    if points.iter().any(|(p, e)| !(*p > 0.0 && *e > 0.0 && p.is_finite() && e.is_finite())) {
        return Err(HarnessError::Parameter);
    }
    let xs: Vec<f64> = points.iter().map(|(p, _)| p.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    Ok(linear_fit(&xs, &ys)?.0)
}

/// Equation, flux mode and stage-solver settings shared by all runs of a study.
/// The step size in `solver` is overridden per run.
#[derive(Debug, Clone, Copy)]
pub struct Problem {
    pub spec: EquationSpec,
    pub flux: FluxMode,
    pub solver: StepperConfig,
}

impl Problem {
    pub fn new(spec: EquationSpec) -> Self {
        Self {
            spec,
            flux: FluxMode::Full,
            solver: StepperConfig::new(1.0),
        }
    }

    fn integrator(&self, scheme: &CompositionScheme, modes: usize, k: f64) -> Result<Integrator, HarnessError> {
        let rhs = Rhs::with_mode(self.spec, modes, self.flux)?;
        Ok(Integrator::new(scheme.clone(), rhs, self.solver.with_step(k))?)
    }
}

struct RunResult {
    state: SpectralField,
    max_iterations: usize,
}

fn run(it: &Integrator, u0: &SpectralField, t_final: f64, param_name: &'static str, param: f64) -> Result<RunResult, HarnessError> {
    let mut max_iterations = 0;
    let state = it
        .evolve(u0, t_final, 1, |o| max_iterations = max_iterations.max(o.window.max_iterations))
        .map_err(|source| HarnessError::Run { param_name, param, source })?;
    Ok(RunResult { state, max_iterations })
}

fn check_decreasing(k_list: &[f64]) -> Result<(), HarnessError> {
    if k_list.len() < 2 {
        return Err(HarnessError::InsufficientPoints(k_list.len()));
    }
    if k_list.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
        return Err(HarnessError::Parameter);
    }
    if k_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HarnessError::Ordering("decreasing"));
    }
    Ok(())
}

/// Global error at `t_final` for each `k`, measured against the same scheme
/// and degree run with `k_ref = min(k)/10`.
pub fn temporal_study(
    problem: &Problem,
    u0: &SpectralField,
    scheme: &CompositionScheme,
    t_final: f64,
    k_list: &[f64],
) -> Result<StudyReport, HarnessError> {
    check_decreasing(k_list)?;
    let modes = u0.modes();
    let k_ref = k_list[k_list.len() - 1] / TEMPORAL_REFINEMENT;
    let mut params: Vec<f64> = k_list.to_vec();
    params.push(k_ref);
    let runs: Vec<RunResult> = params
        .par_iter()
        .map(|&k| run(&problem.integrator(scheme, modes, k)?, u0, t_final, "k", k))
        .collect::<Result<_, _>>()?;
    let (reference, runs) = runs.split_last().expect("reference run present");
    let points = k_list
        .iter()
        .zip(runs)
        .map(|(&k, r)| StudyPoint {
            param: k,
            error: l2_distance(&r.state, &reference.state),
            excluded: false,
            max_stage_iterations: r.max_iterations,
        })
        .collect();
    let descriptor = format!(
        "self-convergence: {} at k_ref={k_ref:e}, N={modes}, T={t_final}",
        scheme.name()
    );
    StudyReport::assemble(StudyKind::Temporal, points, l2_norm(&reference.state), descriptor, estimate_order)
}

/// Scheme used to approximate the semidiscrete flow over one step: the scheme
/// under test when it is of order above four, otherwise the fourth-order
/// triple jump.
pub fn local_reference_scheme(scheme: &CompositionScheme) -> CompositionScheme {
    if scheme.formal_order() > 4 {
        scheme.clone()
    } else {
        scheme_yoshida(4).expect("order 4 is valid")
    }
}

/// One-step defect for each `k`, against `LOCAL_REFINEMENT` substeps of the
/// reference scheme.
pub fn local_error_study(
    problem: &Problem,
    u0: &SpectralField,
    scheme: &CompositionScheme,
    k_list: &[f64],
) -> Result<StudyReport, HarnessError> {
    check_decreasing(k_list)?;
    let modes = u0.modes();
    let reference_scheme = local_reference_scheme(scheme);
    let results: Vec<(StudyPoint, f64)> = k_list
        .par_iter()
        .map(|&k| {
            let one = problem.integrator(scheme, modes, k)?;
            let stepped = one
                .step(u0)
                .map_err(|source| HarnessError::Run {
                    param_name: "k",
                    param: k,
                    source: EvolveError::Step { n: 1, source },
                })?;
            let fine = problem.integrator(&reference_scheme, modes, k / LOCAL_REFINEMENT as f64)?;
            let reference = run(&fine, u0, k, "k", k)?;
            let max_iterations = stepped.traces.iter().map(|t| t.iterations_used).max().unwrap_or(0);
            Ok((
                StudyPoint {
                    param: k,
                    error: l2_distance(&stepped.state, &reference.state),
                    excluded: false,
                    max_stage_iterations: max_iterations.max(reference.max_iterations),
                },
                l2_norm(&reference.state),
            ))
        })
        .collect::<Result<_, HarnessError>>()?;
    let reference_norm = results.iter().fold(0.0f64, |acc, (_, n)| acc.max(*n));
    let points = results.into_iter().map(|(p, _)| p).collect();
    let descriptor = format!(
        "one step vs {} with {} substeps, N={modes}",
        reference_scheme.name(),
        LOCAL_REFINEMENT
    );
    StudyReport::assemble(StudyKind::Local, points, reference_norm, descriptor, estimate_order)
}

/// Error at `t_final` for each degree in `n_list` against a run at `n_ref`
/// (default `2·max(n_list)`) with the same step `k_small`.
///
/// The fitted order is the algebraic decay rate `-d log(err) / d log(N)` over
/// the two largest degrees above the floor.
pub fn spatial_study(
    problem: &Problem,
    u0: &InitialData,
    scheme: &CompositionScheme,
    k_small: f64,
    n_list: &[usize],
    t_final: f64,
    n_ref: Option<usize>,
) -> Result<StudyReport, HarnessError> {
    if n_list.len() < 2 {
        return Err(HarnessError::InsufficientPoints(n_list.len()));
    }
    if n_list.contains(&0) {
        return Err(HarnessError::Parameter);
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HarnessError::Ordering("increasing"));
    }
    let max = *n_list.last().expect("nonempty");
    let n_ref = n_ref.unwrap_or(2 * max);
    if n_ref <= max {
        return Err(HarnessError::ReferenceDegree { n_ref, max });
    }
    let mut degrees = n_list.to_vec();
    degrees.push(n_ref);
    let runs: Vec<RunResult> = degrees
        .par_iter()
        .map(|&n| {
            let it = problem.integrator(scheme, n, k_small)?;
            run(&it, &u0.project(n), t_final, "N", n as f64)
        })
        .collect::<Result<_, _>>()?;
    let (reference, runs) = runs.split_last().expect("reference run present");
    let points = n_list
        .iter()
        .zip(runs)
        .map(|(&n, r)| StudyPoint {
            param: n as f64,
            error: l2_distance(&r.state, &reference.state),
            excluded: false,
            max_stage_iterations: r.max_iterations,
        })
        .collect();
    let descriptor = format!(
        "finer grid: N_ref={n_ref}, {} at k={k_small:e}, T={t_final}",
        scheme.name()
    );
    StudyReport::assemble(StudyKind::Spatial, points, l2_norm(&reference.state), descriptor, |used| {
        Ok(-estimate_order(&used[used.len() - 2..])?)
    })
}
