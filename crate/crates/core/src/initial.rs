//! Smooth periodic initial data with closed-form Fourier coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::spectral::SpectralField;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `a·cos(w x)`.
    Cosine { amplitude: f64, wavenumber: u32 },
    /// `a·Σ_n exp(-(x - c + 2πn)² / (2σ²))`.
    GaussianPeriodic { amplitude: f64, center: f64, width: f64 },
    /// Explicit amplitudes of `e^{ijx}` for `j >= 0`; negative modes by conjugation.
    Modes(Vec<(u32, Complex64)>),
}

impl InitialData {
    pub fn cosine(amplitude: f64) -> Self {
        InitialData::Cosine { amplitude, wavenumber: 1 }
    }

    /// Fourier coefficient of `e^{ijx}` for `j >= 0`.
    pub fn coefficient(&self, j: u32) -> Complex64 {
        match self {
            InitialData::Cosine { amplitude, wavenumber } => {
                if j == *wavenumber && j == 0 {
                    Complex64::new(*amplitude, 0.0)
                } else if j == *wavenumber {
                    Complex64::new(amplitude / 2.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            InitialData::GaussianPeriodic { amplitude, center, width } => {
                let jf = j as f64;
                let mag = amplitude * width / (2.0 * PI).sqrt() * (-0.5 * jf * jf * width * width).exp();
                Complex64::from_polar(mag, -jf * center)
            }
            InitialData::Modes(list) => list
                .iter()
                .filter(|(m, _)| *m == j)
                .map(|(_, c)| *c)
                .sum(),
        }
    }

    /// `P_N u0`, from exact coefficients.
    pub fn project(&self, modes: usize) -> SpectralField {
        let nonneg: Vec<Complex64> = (0..=modes as u32).map(|j| self.coefficient(j)).collect();
        SpectralField::from_nonnegative(&nonneg).expect("nonempty coefficient list")
    }

    /// Pointwise value, for checks against the projection.
    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            InitialData::Cosine { amplitude, wavenumber } => amplitude * (*wavenumber as f64 * x).cos(),
            InitialData::GaussianPeriodic { amplitude, center, width } => (-8..=8)
                .map(|n| {
                    let d = x - center + 2.0 * PI * n as f64;
                    (-d * d / (2.0 * width * width)).exp()
                })
                .sum::<f64>()
                * amplitude,
            InitialData::Modes(list) => list
                .iter()
                .map(|(j, c)| {
                    let e = Complex64::from_polar(1.0, *j as f64 * x);
                    if *j == 0 {
                        c.re
                    } else {
                        2.0 * (c * e).re
                    }
                })
                .sum(),
        }
    }
}
