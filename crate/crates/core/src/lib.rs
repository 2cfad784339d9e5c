//! Structure-preserving solver for periodic KdV-type equations.
//!
//! Space is discretized by the Fourier-Galerkin method on trigonometric
//! polynomials of degree `N`; time by symmetric compositions of the implicit
//! midpoint rule. The discrete flow conserves the L² norm and the mean exactly
//! (up to the stage-solver tolerance).
//!
//! ```
//! use kdv_core::{scheme_yoshida, EquationSpec, InitialData, Integrator, Rhs, StepperConfig, l2_norm};
//!
//! let u0 = InitialData::cosine(1.0).project(32);
//! let rhs = Rhs::new(EquationSpec::kdv(), 32).unwrap();
//! let it = Integrator::new(scheme_yoshida(4).unwrap(), rhs, StepperConfig::new(1e-2)).unwrap();
//! let u = it.evolve(&u0, 0.1, 1, |_| {}).unwrap();
//! assert!((l2_norm(&u) - l2_norm(&u0)).abs() < 1e-12);
//! ```

pub mod diagnostics;
pub mod harness;
pub mod initial;
pub mod integrators;
pub mod io;
pub mod operators;
pub mod spectral;

pub use diagnostics::{invariants, invariants_for, l2_distance, DriftReport, DriftTracker, InvariantTriple};
pub use harness::{
    estimate_order, linear_fit, local_error_study, spatial_study, temporal_study, FitStatus, HarnessError, Problem,
    StudyKind, StudyPoint, StudyReport,
};
pub use initial::InitialData;
pub use integrators::{
    scheme_imr, scheme_yoshida, stability_guard, step_count, CompositionScheme, EvolveError, GuardMode, Integrator,
    Observation, SchemeError, StageTrace, StepError, StepOutput, StepperConfig, TraceSummary, SCHEME_NAMES,
};
pub use operators::{apply_f, linear_multipliers, nonlinear_flux, EquationSpec, FluxMode, LinearMultipliers, OperatorError, Rhs};
pub use spectral::{
    differentiate, galerkin_power, galerkin_product, inner_product, l2_norm, project, synthesize, GridSampling,
    SpectralError, SpectralField,
};
