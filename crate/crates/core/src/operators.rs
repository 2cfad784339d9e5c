//! Semidiscrete right-hand side `F(v) = L v_x - P_N f(v)_x` for the
//! generalized Benjamin family `u_t - L u_x + f(u)_x = 0`, with
//! `l(ξ) = δ|ξ|^{2m} - γ|ξ|^{2r}` and `f(u) = u^{q+1}/(q+1)`.
//!
//! KdV (`u_t + u u_x + u_xxx = 0`) is the instance `(δ, m, γ, r, q) = (1, 1, 0, 0, 1)`,
//! for which `F(v) = -v_xxx - P_N(v v_x)`.

use num_complex::Complex64;
use thiserror::Error;

use crate::spectral::{galerkin_power, SpectralError, SpectralField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("invalid equation: {0}")]
    InvalidSpec(String),
    #[error("multiplier |j|^{exponent} overflows exact float range at N = {modes}")]
    MultiplierRange { modes: usize, exponent: u32 },
    #[error("field degree {got} does not match operator degree {expected}")]
    Degree { got: usize, expected: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Symbol parameters and nonlinearity power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationSpec {
    pub delta: f64,
    pub m: u32,
    pub gamma: f64,
    pub r: u32,
    pub q: u32,
}

impl EquationSpec {
    pub const KDV: EquationSpec = EquationSpec {
        delta: 1.0,
        m: 1,
        gamma: 0.0,
        r: 0,
        q: 1,
    };

    pub fn new(delta: f64, m: u32, gamma: f64, r: u32, q: u32) -> Result<Self, OperatorError> {
        let spec = Self { delta, m, gamma, r, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kdv() -> Self {
        Self::KDV
    }

    pub fn validate(&self) -> Result<(), OperatorError> {
        let mut problems = Vec::new();
        if !(self.delta.is_finite() && self.delta > 0.0) {
            problems.push(format!("delta must be > 0 (got {})", self.delta));
        }
        if self.m < 1 {
            problems.push("m must be >= 1".to_string());
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            problems.push(format!("gamma must be >= 0 (got {})", self.gamma));
        }
        if self.r >= self.m {
            problems.push(format!("r must satisfy 0 <= r < m (got r={}, m={})", self.r, self.m));
        }
        if self.q < 1 {
            problems.push("q must be >= 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(OperatorError::InvalidSpec(problems.join("; ")))
        }
    }

    pub fn is_kdv(&self) -> bool {
        *self == Self::KDV
    }

    /// `l(ξ)` at integer `ξ`.
    pub fn symbol(&self, j: i64) -> f64 {
        let a = j.unsigned_abs() as f64;
        self.delta * a.powi(2 * self.m as i32) - self.gamma * a.powi(2 * self.r as i32)
    }
}

/// `λ_j = i j l(j)` for `j = -N..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMultipliers {
    modes: usize,
    lambda: Vec<Complex64>,
}

impl LinearMultipliers {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn get(&self, j: i64) -> Complex64 {
        self.lambda[(j + self.modes as i64) as usize]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.lambda
    }
}

/// Builds the multiplier table, refusing degrees where `N^{2m+1}` is no longer
/// exactly representable.
pub fn linear_multipliers(spec: &EquationSpec, modes: usize) -> Result<LinearMultipliers, OperatorError> {
    spec.validate()?;
    let exponent = 2 * spec.m + 1;
    let top = (modes as f64).powi(exponent as i32);
    if top >= 2f64.powi(53) {
        return Err(OperatorError::MultiplierRange { modes, exponent });
    }
    let n = modes as i64;
    let lambda = (-n..=n)
        .map(|j| Complex64::new(0.0, j as f64 * spec.symbol(j)))
        .collect();
    Ok(LinearMultipliers { modes, lambda })
}

/// Whether the nonlinear flux participates. `LinearOnly` is a test hook that
/// reduces the equation to its dispersive part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxMode {
    #[default]
    Full,
    LinearOnly,
}

/// Degree-`N` discretization of the right-hand side.
#[derive(Debug, Clone)]
pub struct Rhs {
    spec: EquationSpec,
    multipliers: LinearMultipliers,
    flux_mode: FluxMode,
}

impl Rhs {
    pub fn new(spec: EquationSpec, modes: usize) -> Result<Self, OperatorError> {
        Self::with_mode(spec, modes, FluxMode::Full)
    }

    pub fn with_mode(spec: EquationSpec, modes: usize, flux_mode: FluxMode) -> Result<Self, OperatorError> {
        Ok(Self {
            spec,
            multipliers: linear_multipliers(&spec, modes)?,
            flux_mode,
        })
    }

    pub fn spec(&self) -> &EquationSpec {
        &self.spec
    }

    pub fn modes(&self) -> usize {
        self.multipliers.modes
    }

    pub fn multipliers(&self) -> &LinearMultipliers {
        &self.multipliers
    }

    pub fn flux_mode(&self) -> FluxMode {
        self.flux_mode
    }

    fn check(&self, v: &SpectralField) -> Result<(), OperatorError> {
        if v.modes() != self.modes() {
            return Err(OperatorError::Degree {
                got: v.modes(),
                expected: self.modes(),
            });
        }
        Ok(())
    }

    /// `P_N f(v)`, or zero under [`FluxMode::LinearOnly`].
    pub fn flux(&self, v: &SpectralField) -> Result<SpectralField, OperatorError> {
        self.check(v)?;
        match self.flux_mode {
            FluxMode::Full => nonlinear_flux(v, &self.spec),
            FluxMode::LinearOnly => Ok(SpectralField::zeros(v.modes())),
        }
    }

    /// `F(v)`.
    pub fn apply(&self, v: &SpectralField) -> Result<SpectralField, OperatorError> {
        let flux = self.flux(v)?;
        Ok(v.map_nonnegative(|j, vj| {
            self.multipliers.get(j) * vj - Complex64::new(0.0, j as f64) * flux.coeff(j)
        }))
    }
}

/// `P_N( v^{q+1} / (q+1) )`.
pub fn nonlinear_flux(v: &SpectralField, spec: &EquationSpec) -> Result<SpectralField, OperatorError> {
    let p = spec.q + 1;
    Ok(galerkin_power(v, p)?.scale(1.0 / p as f64))
}

/// `F(v)` for the field's own degree.
pub fn apply_f(v: &SpectralField, spec: &EquationSpec) -> Result<SpectralField, OperatorError> {
    Rhs::new(*spec, v.modes())?.apply(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::inner_product;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cosine(modes: usize, amp: f64) -> SpectralField {
        let mut nonneg = vec![c(0.0, 0.0); modes + 1];
        nonneg[1] = c(amp / 2.0, 0.0);
        SpectralField::from_nonnegative(&nonneg).unwrap()
    }

    #[test]
    fn kdv_multipliers() {
        let lam = linear_multipliers(&EquationSpec::kdv(), 2).unwrap();
        let want = [-8.0, -1.0, 0.0, 1.0, 8.0];
        for (j, w) in (-2..=2).zip(want) {
            assert_eq!(lam.get(j), c(0.0, w));
        }
    }

    #[test]
    fn symbol_family_member() {
        let spec = EquationSpec::new(1.0, 1, 1.0, 0, 1).unwrap();
        let lam = linear_multipliers(&spec, 1).unwrap();
        assert_eq!(lam.get(1), c(0.0, 0.0));
        assert_eq!(lam.get(0), c(0.0, 0.0));
    }

    #[test]
    fn multipliers_are_skew() {
        let spec = EquationSpec::new(1.0, 2, 1.0, 1, 2).unwrap();
        let lam = linear_multipliers(&spec, 40).unwrap();
        for j in -40..=40i64 {
            assert_eq!(lam.get(j).re, 0.0);
            assert_eq!(lam.get(-j), lam.get(j).conj());
        }
    }

    #[test]
    fn multiplier_range_check() {
        let spec = EquationSpec::new(1.0, 4, 0.0, 0, 1).unwrap();
        // 64^9 = 2^54
        assert!(matches!(
            linear_multipliers(&spec, 64),
            Err(OperatorError::MultiplierRange { .. })
        ));
        assert!(linear_multipliers(&spec, 50).is_ok());
    }

    #[test]
    fn invalid_specs() {
        assert!(EquationSpec::new(0.0, 1, 0.0, 0, 1).is_err());
        assert!(EquationSpec::new(1.0, 1, 0.0, 1, 1).is_err());
        assert!(EquationSpec::new(1.0, 1, -1.0, 0, 1).is_err());
        assert!(EquationSpec::new(1.0, 1, 0.0, 0, 0).is_err());
    }

    #[test]
    fn flux_examples() {
        let spec = EquationSpec::kdv();
        let f = nonlinear_flux(&cosine(3, 1.0), &spec).unwrap();
        assert!((f.coeff(0) - c(0.25, 0.0)).norm() < 1e-15);
        assert!((f.coeff(2) - c(0.125, 0.0)).norm() < 1e-15);
        assert!(nonlinear_flux(&SpectralField::zeros(4), &spec).unwrap().is_zero());

        let cubic = EquationSpec::new(1.0, 1, 0.0, 0, 2).unwrap();
        let f3 = nonlinear_flux(&cosine(4, 1.0), &cubic).unwrap();
        // (3 cos x + cos 3x) / 12
        assert!((f3.coeff(1) - c(0.125, 0.0)).norm() < 1e-15);
        assert!((f3.coeff(3) - c(1.0 / 24.0, 0.0)).norm() < 1e-15);
        assert!(f3.coeff(0).norm() < 1e-15 && f3.coeff(2).norm() < 1e-15);
    }

    #[test]
    fn apply_f_examples() {
        let spec = EquationSpec::kdv();
        // -2 sin x + 2 sin 2x; sin(kx) has c_k = -i/2
        let out = apply_f(&cosine(2, 2.0), &spec).unwrap();
        assert!((out.coeff(1) - c(0.0, 1.0)).norm() < 1e-14);
        assert!((out.coeff(2) - c(0.0, -1.0)).norm() < 1e-14);
        assert!(out.coeff(0).norm() < 1e-15);

        let trunc = apply_f(&cosine(1, 2.0), &spec).unwrap();
        assert!((trunc.coeff(1) - c(0.0, 1.0)).norm() < 1e-14);

        let konst = SpectralField::from_nonnegative(&[c(0.7, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(apply_f(&konst, &spec).unwrap().is_zero());
    }

    #[test]
    fn linear_only_drops_flux() {
        let rhs = Rhs::with_mode(EquationSpec::kdv(), 2, FluxMode::LinearOnly).unwrap();
        let out = rhs.apply(&cosine(2, 2.0)).unwrap();
        assert!(out.coeff(2).norm() == 0.0);
        assert!((out.coeff(1) - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn degree_mismatch() {
        let rhs = Rhs::new(EquationSpec::kdv(), 4).unwrap();
        assert!(matches!(rhs.apply(&SpectralField::zeros(3)), Err(OperatorError::Degree { .. })));
    }

    #[test]
    fn orthogonal_and_mean_free() {
        let spec = EquationSpec::new(1.0, 2, 1.0, 1, 2).unwrap();
        let v = SpectralField::from_nonnegative(&[c(0.3, 0.0), c(0.2, -0.1), c(0.05, 0.02), c(-0.01, 0.0)]).unwrap();
        let fv = apply_f(&v, &spec).unwrap();
        assert_eq!(fv.coeff(0), c(0.0, 0.0));
        assert!(inner_product(&fv, &v).re.abs() < 1e-14);
    }
}
