//! Fixtures shared by the criterion benches.

use kdv_core::{EquationSpec, InitialData, Integrator, Rhs, SpectralField, StepperConfig};

/// Smooth test state with energy in every mode.
pub fn smooth_state(modes: usize) -> SpectralField {
    InitialData::GaussianPeriodic {
        amplitude: 1.0,
        center: 0.3,
        width: 0.4,
    }
    .project(modes)
}

pub fn kdv_integrator(scheme: &str, modes: usize, k: f64) -> Integrator {
    let scheme = kdv_core::CompositionScheme::by_name(scheme).expect("known scheme");
    let rhs = Rhs::new(EquationSpec::kdv(), modes).expect("valid degree");
    Integrator::new(scheme, rhs, StepperConfig::new(k)).expect("valid step")
}
