#![allow(dead_code)]

use kdv_core::SpectralField;
use num_complex::Complex64;
use rand::Rng;

/// Conjugate-symmetric field with coefficients uniform in the unit square.
pub fn random_field(rng: &mut impl Rng, modes: usize) -> SpectralField {
    let nonneg: Vec<Complex64> = (0..=modes)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    SpectralField::from_nonnegative(&nonneg).unwrap()
}

/// Random field with amplitudes bounded by `(1 + |j|)^-decay`.
pub fn smooth_random_field(rng: &mut impl Rng, modes: usize, decay: f64) -> SpectralField {
    let nonneg: Vec<Complex64> = (0..=modes)
        .map(|j| {
            let w = (1.0 + j as f64).powf(-decay);
            Complex64::new(rng.gen_range(-1.0..1.0) * w, rng.gen_range(-1.0..1.0) * w)
        })
        .collect();
    SpectralField::from_nonnegative(&nonneg).unwrap()
}

/// Truncated product by direct summation over all index tuples with
/// `p_1 + … + p_r = j`, returned for `j = -out_modes..=out_modes`.
pub fn convolution_oracle(factors: &[&SpectralField], out_modes: usize) -> Vec<Complex64> {
    let mut acc: Vec<(i64, Complex64)> = vec![(0, Complex64::new(1.0, 0.0))];
    for f in factors {
        let n = f.modes() as i64;
        let mut next = Vec::new();
        for (s, c) in &acc {
            for p in -n..=n {
                next.push((s + p, c * f.coeff(p)));
            }
        }
        acc = next;
    }
    let m = out_modes as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * out_modes + 1];
    for (s, c) in acc {
        if s.abs() <= m {
            out[(s + m) as usize] += c;
        }
    }
    out
}
