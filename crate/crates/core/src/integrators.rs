//! Composition Runge-Kutta time stepping built from implicit midpoint substeps.
//!
//! One step of size `k` applies `s` implicit midpoint substeps of sizes
//! `k·b_1, …, k·b_s`:
//!
//! ```text
//! Y^{n,i} = Y^{n,i-1} + k b_i F((Y^{n,i} + Y^{n,i-1}) / 2),   Y^{n,0} = U^n,  U^{n+1} = Y^{n,s}
//! ```
//!
//! Each substep is solved for its midpoint `Z* = (Y^{n,i} + Y^{n,i-1})/2` by the
//! fixed-point iteration
//!
//! ```text
//! (I - (k b_i / 2) L∂_x) Z_{ν+1} = Y^{n,i-1} - (k b_i / 2) P_N f(Z_ν)_x,   Z_0 = Y^{n,i-1}
//! ```
//!
//! whose linear part is diagonal in Fourier space.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::operators::{OperatorError, Rhs};
use crate::spectral::{sup_on_grid, SpectralError, SpectralField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("stage {stage} did not converge: {trace}")]
    StageDivergence { stage: usize, trace: StageTrace },
    #[error("step refused by contraction guard: Gamma = {gamma:.6} >= 1")]
    GuardRejected { gamma: f64 },
    #[error("invalid stepper configuration: {0}")]
    Config(String),
    #[error("substep size must be nonzero and finite (got {0})")]
    Substep(f64),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

impl From<SpectralError> for StepError {
    fn from(e: SpectralError) -> Self {
        StepError::Operator(OperatorError::Spectral(e))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("final time {t_final} is not an integer multiple of k = {k}")]
    StepCount { t_final: f64, k: f64 },
    #[error("step {n}: {source}")]
    Step {
        n: usize,
        #[source]
        source: StepError,
    },
}

impl EvolveError {
    /// Index of the failing step, if the failure happened while stepping.
    pub fn step_index(&self) -> Option<usize> {
        match self {
            EvolveError::Step { n, .. } => Some(*n),
            EvolveError::StepCount { .. } => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("composition order must be an even integer >= 4 (got {0})")]
    Order(u32),
    #[error("unknown scheme '{name}' (valid: {})", SCHEME_NAMES.join(", "))]
    Unknown { name: String },
}

/// Names accepted by [`CompositionScheme::by_name`].
pub const SCHEME_NAMES: [&str; 4] = ["imr", "yoshida4", "yoshida6", "yoshida8"];

/// Substep fractions `b_1..b_s` of a composition of implicit midpoint steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionScheme {
    name: String,
    b: Vec<f64>,
    formal_order: u32,
}

impl CompositionScheme {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn formal_order(&self) -> u32 {
        self.formal_order
    }

    pub fn max_abs_b(&self) -> f64 {
        self.b.iter().fold(0.0, |acc, b| acc.max(b.abs()))
    }

    /// `Σ b_i^power`.
    pub fn power_sum(&self, power: i32) -> f64 {
        self.b.iter().map(|b| b.powi(power)).sum()
    }

    pub fn is_palindromic(&self) -> bool {
        let s = self.b.len();
        (0..s).all(|i| self.b[i] == self.b[s - 1 - i])
    }

    pub fn by_name(name: &str) -> Result<Self, SchemeError> {
        match name {
            "imr" => Ok(scheme_imr()),
            "yoshida4" => scheme_yoshida(4),
            "yoshida6" => scheme_yoshida(6),
            "yoshida8" => scheme_yoshida(8),
            other => Err(SchemeError::Unknown { name: other.to_string() }),
        }
    }
}

/// The implicit midpoint rule, `b = [1]`.
pub fn scheme_imr() -> CompositionScheme {
    CompositionScheme {
        name: "imr".to_string(),
        b: vec![1.0],
        formal_order: 2,
    }
}

/// Symmetric composition of order `order` by repeated triple jumps starting
/// from the midpoint rule; `3^{order/2 - 1}` stages.
pub fn scheme_yoshida(order: u32) -> Result<CompositionScheme, SchemeError> {
    if order < 4 || !order.is_multiple_of(2) {
        return Err(SchemeError::Order(order));
    }
    let mut b = vec![1.0];
    // Lift an order-2r method to order 2r+2.
    for r in 1..order / 2 {
        let outer = 1.0 / (2.0 - 2f64.powf(1.0 / (2 * r + 1) as f64));
        let inner = 1.0 - 2.0 * outer;
        let mut next = Vec::with_capacity(3 * b.len());
        for scale in [outer, inner, outer] {
            next.extend(b.iter().map(|x| x * scale));
        }
        b = next;
    }
    Ok(CompositionScheme {
        name: format!("yoshida{order}"),
        b,
        formal_order: order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuardMode {
    Reject,
    #[default]
    Warn,
    Off,
}

impl GuardMode {
    pub const NAMES: [&'static str; 3] = ["reject", "warn", "off"];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "reject" => Some(GuardMode::Reject),
            "warn" => Some(GuardMode::Warn),
            "off" => Some(GuardMode::Off),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    /// Time step `k`.
    pub k: f64,
    /// Relative L² increment at which a stage iteration stops.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// Stand-in for the inverse-inequality constant in the guard.
    pub c0_estimate: f64,
    pub guard_mode: GuardMode,
}

impl StepperConfig {
    pub const DEFAULT_FP_TOL: f64 = 1e-13;
    pub const DEFAULT_FP_MAX_ITER: usize = 100;

    pub fn new(k: f64) -> Self {
        Self {
            k,
            fp_tol: Self::DEFAULT_FP_TOL,
            fp_max_iter: Self::DEFAULT_FP_MAX_ITER,
            c0_estimate: 1.0,
            guard_mode: GuardMode::Warn,
        }
    }

    pub fn with_step(&self, k: f64) -> Self {
        Self { k, ..*self }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        let mut problems = Vec::new();
        if !(self.k.is_finite() && self.k > 0.0) {
            problems.push(format!("k must be > 0 (got {})", self.k));
        }
        if !(self.fp_tol > 0.0 && self.fp_tol < 1.0) {
            problems.push(format!("fp_tol must lie in (0, 1) (got {})", self.fp_tol));
        }
        if self.fp_max_iter < 2 {
            problems.push(format!("fp_max_iter must be >= 2 (got {})", self.fp_max_iter));
        }
        if !(self.c0_estimate.is_finite() && self.c0_estimate > 0.0) {
            problems.push(format!("c0 must be > 0 (got {})", self.c0_estimate));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(StepError::Config(problems.join("; ")))
        }
    }
}

/// Outcome of one stage solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageTrace {
    pub iterations_used: usize,
    /// Last relative increment `‖Z_{ν+1} - Z_ν‖ / ‖Z_{ν+1}‖`.
    pub final_residual: f64,
    /// Largest observed ratio of successive increments.
    pub gamma_estimate: f64,
    pub converged: bool,
}

impl fmt::Display for StageTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations, residual {:.3e}, observed contraction {:.3e}",
            self.iterations_used, self.final_residual, self.gamma_estimate
        )
    }
}

/// `Γ = (C₀/2)·k·max|b_i|·N·(R+1)`.
pub fn stability_guard(cfg: &StepperConfig, modes: usize, scheme: &CompositionScheme, sup_norm: f64) -> f64 {
    0.5 * cfg.c0_estimate * cfg.k.abs() * scheme.max_abs_b() * modes as f64 * (sup_norm + 1.0)
}

/// Number of steps `M` with `M·k = T`, tolerating a mismatch of `1e-12·T`.
pub fn step_count(t_final: f64, k: f64) -> Result<usize, EvolveError> {
    let err = || EvolveError::StepCount { t_final, k };
    if !(t_final > 0.0 && k > 0.0 && t_final.is_finite()) {
        return Err(err());
    }
    let m = (t_final / k).round();
    if m < 1.0 || (m * k - t_final).abs() > 1e-12 * t_final {
        return Err(err());
    }
    Ok(m as usize)
}

/// Result of one full composition step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: SpectralField,
    pub traces: Vec<StageTrace>,
    /// Guard value `Γ` evaluated at the incoming state, unless the guard is off.
    pub guard: Option<f64>,
}

/// Aggregate of stage traces between two observations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceSummary {
    pub stages: usize,
    pub max_iterations: usize,
    pub max_gamma_estimate: f64,
    pub max_residual: f64,
    pub max_guard: Option<f64>,
}

impl TraceSummary {
    pub fn absorb(&mut self, out: &StepOutput) {
        for t in &out.traces {
            self.stages += 1;
            self.max_iterations = self.max_iterations.max(t.iterations_used);
            self.max_gamma_estimate = self.max_gamma_estimate.max(t.gamma_estimate);
            self.max_residual = self.max_residual.max(t.final_residual);
        }
        if let Some(g) = out.guard {
            self.max_guard = Some(self.max_guard.map_or(g, |m: f64| m.max(g)));
        }
    }
}

/// State handed to an [`Integrator::evolve`] observer.
#[derive(Debug)]
pub struct Observation<'a> {
    pub n: usize,
    pub t: f64,
    pub state: &'a SpectralField,
    /// Stages taken since the previous observation.
    pub window: TraceSummary,
}

/// A stepping session: scheme, discretized right-hand side and solver settings.
#[derive(Debug, Clone)]
pub struct Integrator {
    scheme: CompositionScheme,
    rhs: Rhs,
    cfg: StepperConfig,
}

impl Integrator {
    pub fn new(scheme: CompositionScheme, rhs: Rhs, cfg: StepperConfig) -> Result<Self, StepError> {
        cfg.validate()?;
        Ok(Self { scheme, rhs, cfg })
    }

    pub fn scheme(&self) -> &CompositionScheme {
        &self.scheme
    }

    pub fn rhs(&self) -> &Rhs {
        &self.rhs
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn modes(&self) -> usize {
        self.rhs.modes()
    }

    /// One implicit midpoint substep of signed size `bk` from `y_prev`.
    pub fn substage(&self, y_prev: &SpectralField, bk: f64) -> Result<(SpectralField, StageTrace), StepError> {
        let (mid, trace) = self.solve_midpoint(y_prev, bk)?;
        Ok((&mid.scale(2.0) - y_prev, trace))
    }

    /// Fixed-point solve for `Z* = Y + (bk/2) F(Z*)`.
    fn solve_midpoint(&self, y_prev: &SpectralField, bk: f64) -> Result<(SpectralField, StageTrace), StepError> {
        if !(bk.is_finite() && bk != 0.0) {
            return Err(StepError::Substep(bk));
        }
        let modes = self.modes();
        let half = 0.5 * bk;
        let lambda = self.rhs.multipliers();
        // |1 - half·λ_j| >= 1 since λ_j is imaginary.
        let inv_den: Vec<Complex64> = (0..=modes as i64)
            .map(|j| (Complex64::new(1.0, 0.0) - lambda.get(j) * half).inv())
            .collect();

        let mut z = y_prev.clone();
        let mut prev_increment: Option<f64> = None;
        let mut trace = StageTrace {
            iterations_used: 0,
            final_residual: f64::INFINITY,
            gamma_estimate: 0.0,
            converged: false,
        };
        for iter in 1..=self.cfg.fp_max_iter {
            let flux = self.rhs.flux(&z)?;
            let next = y_prev.map_nonnegative(|j, yj| {
                let nonlinear = Complex64::new(0.0, half * j as f64) * flux.coeff(j);
                (yj - nonlinear) * inv_den[j as usize]
            });
            let increment = (&next - &z).coeff_energy().sqrt();
            let size = next.coeff_energy().sqrt();
            if let Some(prev) = prev_increment.filter(|p| *p > 0.0) {
                trace.gamma_estimate = trace.gamma_estimate.max(increment / prev);
            }
            z = next;
            trace.iterations_used = iter;
            trace.final_residual = if size > 0.0 { increment / size } else { 0.0 };
            if increment <= self.cfg.fp_tol * size {
                trace.converged = true;
                return Ok((z, trace));
            }
            prev_increment = Some(increment);
        }
        Err(StepError::StageDivergence { stage: 0, trace })
    }

    /// Guard value for stepping from `u` with step `dt`.
    pub fn guard_value(&self, u: &SpectralField, dt: f64) -> Result<f64, StepError> {
        let sup = sup_on_grid(u, 4 * u.modes())?;
        Ok(stability_guard(&self.cfg.with_step(dt), self.modes(), &self.scheme, sup))
    }

    /// One composition step of size `k` from the configuration.
    pub fn step(&self, u: &SpectralField) -> Result<StepOutput, StepError> {
        self.step_by(u, self.cfg.k)
    }

    /// One composition step of signed size `dt`.
    pub fn step_by(&self, u: &SpectralField, dt: f64) -> Result<StepOutput, StepError> {
        let guard = match self.cfg.guard_mode {
            GuardMode::Off => None,
            mode => {
                let gamma = self.guard_value(u, dt)?;
                if mode == GuardMode::Reject && gamma >= 1.0 {
                    return Err(StepError::GuardRejected { gamma });
                }
                Some(gamma)
            }
        };
        let mut state = u.clone();
        let mut traces = Vec::with_capacity(self.scheme.stages());
        for (i, b) in self.scheme.b.iter().enumerate() {
            let (next, trace) = self.substage(&state, dt * b).map_err(|e| match e {
                StepError::StageDivergence { trace, .. } => StepError::StageDivergence { stage: i + 1, trace },
                other => other,
            })?;
            traces.push(trace);
            state = next;
        }
        Ok(StepOutput { state, traces, guard })
    }

    /// Advances `u0` (resized to the operator degree) to `t_final = M·k`.
    ///
    /// The observer sees `n = 0`, every `cadence`-th step, and the final step.
    pub fn evolve<F>(
        &self,
        u0: &SpectralField,
        t_final: f64,
        cadence: usize,
        mut observer: F,
    ) -> Result<SpectralField, EvolveError>
    where
        F: FnMut(&Observation<'_>),
    {
        let steps = step_count(t_final, self.cfg.k)?;
        let cadence = cadence.max(1);
        let mut state = if u0.modes() == self.modes() {
            u0.clone()
        } else {
            u0.resized(self.modes())
        };
        observer(&Observation {
            n: 0,
            t: 0.0,
            state: &state,
            window: TraceSummary::default(),
        });
        let mut window = TraceSummary::default();
        let mut warned = false;
        for n in 1..=steps {
            let out = self.step(&state).map_err(|source| EvolveError::Step { n, source })?;
            if let Some(g) = out.guard.filter(|g| *g >= 1.0 && !warned) {
                log::warn!("step {n}: contraction guard Gamma = {g:.4} >= 1; continuing");
                warned = true;
            }
            window.absorb(&out);
            state = out.state;
            if n % cadence == 0 || n == steps {
                observer(&Observation {
                    n,
                    t: n as f64 * self.cfg.k,
                    state: &state,
                    window,
                });
                window = TraceSummary::default();
            }
        }
        Ok(state)
    }
}
