//! Trigonometric polynomials of degree `N` on the periodic interval `[-π, π)`.
//!
//! A [`SpectralField`] stores the complex amplitudes of `e^{ijx}` for
//! `j = -N..=N`. Every constructor keeps the array conjugate symmetric, so the
//! represented function is real. Products are computed on a zero-padded grid
//! large enough that the truncated result is free of aliasing.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

/// Largest imaginary residue tolerated after a real-space evaluation,
/// relative to `1 + max|value|`.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid of {points} points cannot resolve degree {modes} (need at least {})", 2 * .modes + 1)]
    Degree { points: usize, modes: usize },
    #[error("dimension mismatch: degree {left} vs degree {right}")]
    Dimension { left: usize, right: usize },
    #[error("imaginary residue {residue:e} exceeds bound {bound:e} after real-space evaluation")]
    ImaginaryResidue { residue: f64, bound: f64 },
    #[error("coefficient array has length {len}, expected {expected}")]
    Length { len: usize, expected: usize },
    #[error("coefficients are not conjugate symmetric (mismatch {mismatch:e} at mode {mode})")]
    Asymmetric { mode: i64, mismatch: f64 },
    #[error("power exponent must be at least 1")]
    ZeroPower,
}

/// Real 2π-periodic trigonometric polynomial of degree at most `N`.
#[derive(Clone, PartialEq)]
pub struct SpectralField {
    modes: usize,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("modes", &self.modes)
            .field("nonneg", &&self.coeffs[self.modes..])
            .finish()
    }
}

impl SpectralField {
    pub fn zeros(modes: usize) -> Self {
        Self {
            modes,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * modes + 1],
        }
    }

    /// Builds a field from the amplitudes of modes `0..=N`; negative modes are
    /// filled in by conjugation and the imaginary part of mode 0 is dropped.
    pub fn from_nonnegative(nonneg: &[Complex64]) -> Result<Self, SpectralError> {
        if nonneg.is_empty() {
            return Err(SpectralError::Length { len: 0, expected: 1 });
        }
        let modes = nonneg.len() - 1;
        let mut field = Self::zeros(modes);
        field.coeffs[modes] = Complex64::new(nonneg[0].re, 0.0);
        for (j, c) in nonneg.iter().enumerate().skip(1) {
            field.coeffs[modes + j] = *c;
            field.coeffs[modes - j] = c.conj();
        }
        Ok(field)
    }

    /// Builds a field from the full `-N..=N` array, rejecting data that is not
    /// conjugate symmetric to within `tol` (absolute).
    pub fn from_coeffs(coeffs: Vec<Complex64>, tol: f64) -> Result<Self, SpectralError> {
        if coeffs.len().is_multiple_of(2) {
            return Err(SpectralError::Length {
                len: coeffs.len(),
                expected: coeffs.len() + 1,
            });
        }
        let modes = coeffs.len() / 2;
        for j in 0..=modes {
            let mismatch = (coeffs[modes + j] - coeffs[modes - j].conj()).norm();
            if mismatch > tol {
                return Err(SpectralError::Asymmetric {
                    mode: j as i64,
                    mismatch,
                });
            }
        }
        Self::from_nonnegative(&coeffs[modes..])
    }

    /// Highest retained wavenumber `N`.
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Amplitude of `e^{ijx}`; zero outside `|j| <= N`.
    pub fn coeff(&self, j: i64) -> Complex64 {
        if j.unsigned_abs() as usize > self.modes {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(j + self.modes as i64) as usize]
        }
    }

    /// Coefficients ordered `-N..=N`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficients of modes `0..=N`.
    pub fn nonnegative(&self) -> &[Complex64] {
        &self.coeffs[self.modes..]
    }

    /// Wavenumbers paired with coefficients, `-N..=N`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.modes as i64;
        self.coeffs.iter().enumerate().map(move |(i, c)| (i as i64 - n, *c))
    }

    /// Applies `f(j, c_j)` to modes `j >= 0` and mirrors the result, which
    /// keeps the field conjugate symmetric whatever `f` does.
    pub fn map_nonnegative(&self, mut f: impl FnMut(i64, Complex64) -> Complex64) -> Self {
        let n = self.modes;
        let mut out = Self::zeros(n);
        out.coeffs[n] = Complex64::new(f(0, self.coeffs[n]).re, 0.0);
        for j in 1..=n {
            let c = f(j as i64, self.coeffs[n + j]);
            out.coeffs[n + j] = c;
            out.coeffs[n - j] = c.conj();
        }
        out
    }

    /// Truncation (`modes < N`) or zero extension (`modes > N`).
    pub fn resized(&self, modes: usize) -> Self {
        let mut out = Self::zeros(modes);
        let keep = modes.min(self.modes);
        for j in -(keep as i64)..=(keep as i64) {
            out.coeffs[(j + modes as i64) as usize] = self.coeff(j);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            modes: self.modes,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `Σ_j |c_j|²`, the squared norm without the `2π` weight.
    pub fn coeff_energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Largest conjugate-symmetry mismatch over all modes.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.modes;
        let mut worst = self.coeffs[n].im.abs();
        for j in 1..=n {
            worst = worst.max((self.coeffs[n + j] - self.coeffs[n - j].conj()).norm());
        }
        worst
    }

    fn check_same_degree(&self, other: &Self) -> Result<(), SpectralError> {
        if self.modes != other.modes {
            return Err(SpectralError::Dimension {
                left: self.modes,
                right: other.modes,
            });
        }
        Ok(())
    }
}

fn combine(a: &SpectralField, b: &SpectralField, op: impl Fn(Complex64, Complex64) -> Complex64) -> SpectralField {
    let modes = a.modes.max(b.modes);
    let mut out = SpectralField::zeros(modes);
    for (i, slot) in out.coeffs.iter_mut().enumerate() {
        let j = i as i64 - modes as i64;
        *slot = op(a.coeff(j), b.coeff(j));
    }
    out
}

/// Sum; a field of lower degree is zero extended.
impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: Self) -> SpectralField {
        combine(self, rhs, |x, y| x + y)
    }
}

/// Difference; a field of lower degree is zero extended.
impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: Self) -> SpectralField {
        combine(self, rhs, |x, y| x - y)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(rhs)
    }
}

/// Equispaced samples `values[m] = v(x_m)` with `x_m = -π + 2πm/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSampling {
    values: Vec<f64>,
}

impl GridSampling {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Samples `f` at the `points` grid nodes.
    pub fn from_fn(points: usize, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: (0..points).map(|m| f(grid_point(m, points))).collect(),
        }
    }

    pub fn points(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Grid node coordinates matching [`values`](Self::values).
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.values.len();
        (0..m).map(move |i| grid_point(i, m))
    }
}

/// Node `x_m = -π + 2πm/M`.
pub fn grid_point(m: usize, points: usize) -> f64 {
    -PI + 2.0 * PI * m as f64 / points as f64
}

/// `(-1)^j`, the phase relating nodes starting at `-π` to nodes starting at 0.
fn shift_sign(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(points: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(points)
        } else {
            p.plan_fft_forward(points)
        }
    })
}

/// Smallest length `>= min` whose only prime factors are 2, 3 and 5.
pub fn fast_length(min: usize) -> usize {
    let mut m = min.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Grid length used for an exact degree-`power` product of degree-`modes`
/// fields: the smallest fast length `>= (power + 1)·N + 1`.
pub fn padded_length(modes: usize, power: usize) -> usize {
    fast_length((power + 1) * modes + 1)
}

/// Values of `field` on a grid of `points` nodes starting at 0 (not `-π`),
/// as the complex buffer returned by the inverse transform.
fn to_grid(field: &SpectralField, points: usize) -> Vec<Complex64> {
    let n = field.modes;
    let mut buf = vec![Complex64::new(0.0, 0.0); points];
    buf[0] = field.coeffs[n];
    for j in 1..=n {
        buf[j] = field.coeffs[n + j];
        buf[points - j] = field.coeffs[n - j];
    }
    plan(points, true).process(&mut buf);
    buf
}

/// Converts an inverse-transform buffer into real values, enforcing the
/// imaginary-residue bound.
fn take_real(buf: &[Complex64]) -> Result<Vec<f64>, SpectralError> {
    let mut residue = 0.0f64;
    let mut peak = 0.0f64;
    let values = buf
        .iter()
        .map(|c| {
            residue = residue.max(c.im.abs());
            peak = peak.max(c.re.abs());
            c.re
        })
        .collect();
    let bound = IMAG_RESIDUE_TOL * (1.0 + peak);
    if residue > bound {
        return Err(SpectralError::ImaginaryResidue { residue, bound });
    }
    Ok(values)
}

/// Degree-`modes` truncation of the discrete Fourier expansion of real values
/// given on a grid starting at 0.
#[allow(clippy::needless_range_loop)]
fn from_grid(values: &[f64], modes: usize) -> SpectralField {
    let points = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(points, false).process(&mut buf);
    let scale = 1.0 / points as f64;
    let mut out = SpectralField::zeros(modes);
    out.coeffs[modes] = Complex64::new(buf[0].re * scale, 0.0);
    for j in 1..=modes {
        let c = buf[j] * scale;
        out.coeffs[modes + j] = c;
        out.coeffs[modes - j] = c.conj();
    }
    out
}

/// `P_N` applied to the trigonometric interpolant of `samples`.
pub fn project(samples: &GridSampling, modes: usize) -> Result<SpectralField, SpectralError> {
    let points = samples.points();
    if points < 2 * modes + 1 {
        return Err(SpectralError::Degree { points, modes });
    }
    let field = from_grid(&samples.values, modes);
    // Samples start at -π; undo the (-1)^j phase.
    Ok(field.map_nonnegative(|j, c| c * shift_sign(j as usize)))
}

/// Evaluates `field` at the `points` nodes `x_m = -π + 2πm/M`.
pub fn synthesize(field: &SpectralField, points: usize) -> Result<GridSampling, SpectralError> {
    if points < 2 * field.modes + 1 {
        return Err(SpectralError::Degree {
            points,
            modes: field.modes,
        });
    }
    let shifted = field.map_nonnegative(|j, c| c * shift_sign(j as usize));
    let buf = to_grid(&shifted, points);
    Ok(GridSampling::new(take_real(&buf)?))
}

/// Largest absolute value of `field` on a grid of `points` nodes.
pub fn sup_on_grid(field: &SpectralField, points: usize) -> Result<f64, SpectralError> {
    let buf = to_grid(field, points.max(2 * field.modes + 1));
    Ok(take_real(&buf)?.iter().fold(0.0, |acc, v| acc.max(v.abs())))
}

/// `(ij)^order`.
pub fn derivative_symbol(j: i64, order: u32) -> Complex64 {
    let mag = (j as f64).powi(order as i32);
    match order % 4 {
        0 => Complex64::new(mag, 0.0),
        1 => Complex64::new(0.0, mag),
        2 => Complex64::new(-mag, 0.0),
        _ => Complex64::new(0.0, -mag),
    }
}

/// `∂_x^order`; mode 0 is annihilated.
pub fn differentiate(field: &SpectralField, order: u32) -> SpectralField {
    field.map_nonnegative(|j, c| c * derivative_symbol(j, order))
}

/// `P_N(a·b)` without aliasing error.
pub fn galerkin_product(a: &SpectralField, b: &SpectralField) -> Result<SpectralField, SpectralError> {
    a.check_same_degree(b)?;
    let points = padded_length(a.modes, 2);
    let av = take_real(&to_grid(a, points))?;
    let bv = take_real(&to_grid(b, points))?;
    let prod: Vec<f64> = av.iter().zip(&bv).map(|(x, y)| x * y).collect();
    Ok(from_grid(&prod, a.modes))
}

/// `P_N(a^power)` without aliasing error.
pub fn galerkin_power(a: &SpectralField, power: u32) -> Result<SpectralField, SpectralError> {
    match power {
        0 => Err(SpectralError::ZeroPower),
        1 => Ok(a.clone()),
        p => {
            let points = padded_length(a.modes, p as usize);
            let values = take_real(&to_grid(a, points))?;
            let powered: Vec<f64> = values.iter().map(|v| v.powi(p as i32)).collect();
            Ok(from_grid(&powered, a.modes))
        }
    }
}

/// `∫_{-π}^{π} a·conj(b) dx` via Parseval.
pub fn inner_product(a: &SpectralField, b: &SpectralField) -> Complex64 {
    let modes = a.modes.min(b.modes) as i64;
    let sum: Complex64 = (-modes..=modes).map(|j| a.coeff(j) * b.coeff(j).conj()).sum();
    sum * (2.0 * PI)
}

/// `‖v‖ = (2π Σ|c_j|²)^{1/2}`.
pub fn l2_norm(field: &SpectralField) -> f64 {
    (2.0 * PI * field.coeff_energy()).sqrt()
}
