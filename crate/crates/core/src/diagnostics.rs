//! Conserved functionals of KdV and drift tracking along trajectories.

use std::f64::consts::PI;

use crate::operators::EquationSpec;
use crate::spectral::{galerkin_power, l2_norm, SpectralError, SpectralField};

/// `(∫u, ∫u², ∫(u_x² - u³/3))` over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantTriple {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

/// The three KdV functionals, exact for `v` in `S_N`.
pub fn invariants(v: &SpectralField) -> Result<InvariantTriple, SpectralError> {
    let i1 = 2.0 * PI * v.coeff(0).re;
    let i2 = 2.0 * PI * v.coeff_energy();
    let gradient: f64 = v.iter().map(|(j, c)| (j * j) as f64 * c.norm_sqr()).sum();
    // Mode 0 of the padded cube is ∫u³ / 2π with no aliasing.
    let cube_mean = galerkin_power(v, 3)?.coeff(0).re;
    let i3 = 2.0 * PI * gradient - 2.0 * PI * cube_mean / 3.0;
    Ok(InvariantTriple { i1, i2, i3 })
}

/// Functionals for `spec`; the KdV Hamiltonian is reported only for KdV.
pub fn invariants_for(v: &SpectralField, spec: &EquationSpec) -> Result<(f64, f64, Option<f64>), SpectralError> {
    if spec.is_kdv() {
        let t = invariants(v)?;
        Ok((t.i1, t.i2, Some(t.i3)))
    } else {
        Ok((2.0 * PI * v.coeff(0).re, 2.0 * PI * v.coeff_energy(), None))
    }
}

/// Parseval distance; the field of lower degree is zero extended.
pub fn l2_distance(a: &SpectralField, b: &SpectralField) -> f64 {
    l2_norm(&(a - b))
}

/// Largest deviation of a scalar from its first observed value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Deviation {
    pub max_abs: f64,
    pub at_time: f64,
}

impl Deviation {
    fn update(&mut self, value: f64, initial: f64, t: f64) {
        let d = (value - initial).abs();
        if d > self.max_abs {
            self.max_abs = d;
            self.at_time = t;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftReport {
    pub i1: Deviation,
    pub i2: Deviation,
    /// `None` when the KdV Hamiltonian does not apply.
    pub i3: Option<Deviation>,
    /// `max_n |‖U^n‖ - ‖U^0‖|`.
    pub l2_drift: f64,
    pub initial_l2: f64,
    pub observations: usize,
}

impl DriftReport {
    pub fn relative_l2_drift(&self) -> f64 {
        if self.initial_l2 > 0.0 {
            self.l2_drift / self.initial_l2
        } else {
            self.l2_drift
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Baseline {
    i1: f64,
    i2: f64,
    i3: Option<f64>,
    l2: f64,
}

/// Accumulates drift against the first observed state.
#[derive(Debug, Clone)]
pub struct DriftTracker {
    spec: EquationSpec,
    baseline: Option<Baseline>,
    report: DriftReport,
}

impl DriftTracker {
    pub fn new(spec: EquationSpec) -> Self {
        Self {
            spec,
            baseline: None,
            report: DriftReport {
                i1: Deviation::default(),
                i2: Deviation::default(),
                i3: spec.is_kdv().then(Deviation::default),
                l2_drift: 0.0,
                initial_l2: 0.0,
                observations: 0,
            },
        }
    }

    pub fn observe(&mut self, t: f64, v: &SpectralField) -> Result<(), SpectralError> {
        let (i1, i2, i3) = invariants_for(v, &self.spec)?;
        let l2 = l2_norm(v);
        self.report.observations += 1;
        let base = *self.baseline.get_or_insert(Baseline { i1, i2, i3, l2 });
        self.report.initial_l2 = base.l2;
        self.report.i1.update(i1, base.i1, t);
        self.report.i2.update(i2, base.i2, t);
        if let (Some(dev), Some(now), Some(start)) = (self.report.i3.as_mut(), i3, base.i3) {
            dev.update(now, start, t);
        }
        self.report.l2_drift = self.report.l2_drift.max((l2 - base.l2).abs());
        Ok(())
    }

    /// `None` until at least two states were observed.
    pub fn report(&self) -> Option<DriftReport> {
        (self.report.observations >= 2).then_some(self.report)
    }
}
