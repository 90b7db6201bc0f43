//! Rigid-sphere scattering model used as a synthetic HRTF source.
//!
//! For a plane wave arriving from direction `d` at a rigid sphere of radius
//! `a`, the total pressure at the surface point `e`, relative to the free
//! field pressure at the center, is
//!
//! ```text
//! p = i / (ka)² · Σ_n (2n + 1) (−i)ⁿ Pₙ(cos θ) / hₙ'(ka),   cos θ = d · e
//! ```
//!
//! with `hₙ = jₙ + i yₙ` the spherical Hankel function of the first kind
//! (time dependence `e^{−iωt}`). The magnitude is the same under either time
//! convention.

use super::{Direction, HrtfError, HrtfSet};
use crate::geom::Vec3;
use num_complex::Complex64;
use rayon::prelude::*;

/// Speed of sound in air at about 20 °C, m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Terms beyond `⌈ka⌉` kept in the series.
const EXTRA_TERMS: usize = 12;

/// The series is accepted when its last coefficient is below this fraction
/// of the largest one. At the fixed order `⌈ka⌉ + 12` that holds up to
/// `ka ≈ 35`, where the truncation error in the gain is about 0.02 dB.
const CONVERGENCE_TOL: f64 = 1e-3;

/// `j_0(x) ..= j_nmax(x)` for `x > 0` by downward recurrence, normalised
/// against the closed forms of `j_0` or `j_1`.
pub fn spherical_bessel_j(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0, "spherical Bessel functions need x > 0");
    let m = nmax.max(x.ceil() as usize).max(1);
    let start = m + (40.0 * m as f64).sqrt().ceil() as usize + 10;
    let mut f = vec![0.0; start + 2];
    f[start] = 1e-300;
    for n in (1..=start).rev() {
        f[n - 1] = (2 * n + 1) as f64 / x * f[n] - f[n + 1];
        if f[n - 1].abs() > 1e250 {
            for v in &mut f[n - 1..] {
                *v *= 1e-250;
            }
        }
    }
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    let scale = if j0.abs() >= j1.abs() { j0 / f[0] } else { j1 / f[1] };
    f.truncate(nmax + 1);
    for v in &mut f {
        *v *= scale;
    }
    f
}

/// `y_0(x) ..= y_nmax(x)` by upward recurrence (stable for the second kind).
pub fn spherical_bessel_y(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0, "spherical Bessel functions need x > 0");
    let mut y = Vec::with_capacity(nmax + 1);
    y.push(-x.cos() / x);
    if nmax >= 1 {
        y.push(-x.cos() / (x * x) - x.sin() / x);
    }
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 / x * y[n] - y[n - 1];
        y.push(next);
    }
    y
}

/// `(2n + 1) (−i)ⁿ i / (x² hₙ'(x))` for `n = 0 ..= ⌈x⌉ + 12`, after checking
/// that the tail is negligible.
fn series_coefficients(x: f64) -> Result<Vec<Complex64>, HrtfError> {
    let order = x.ceil() as usize + EXTRA_TERMS;
    let j = spherical_bessel_j(order + 1, x);
    let y = spherical_bessel_y(order + 1, x);
    let h = |n: usize| Complex64::new(j[n], y[n]);
    let i = Complex64::i();
    let mut minus_i_pow = Complex64::new(1.0, 0.0);
    let mut coeffs = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let dh = if n == 0 {
            -h(1)
        } else {
            h(n - 1) - h(n) * ((n + 1) as f64 / x)
        };
        let c = if dh.re.is_finite() && dh.im.is_finite() {
            minus_i_pow * i * ((2 * n + 1) as f64) / (dh * (x * x))
        } else {
            // |hₙ'| overflowed: the term is far below double precision
            Complex64::new(0.0, 0.0)
        };
        coeffs.push(c);
        minus_i_pow *= -i;
    }
    // |Pₙ| ≤ 1, so the last coefficient bounds the last term
    let last = coeffs[order].norm();
    let scale: f64 = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if last.is_nan() || last > CONVERGENCE_TOL * scale || !scale.is_finite() {
        return Err(HrtfError::SeriesNotConverged { ka: x, order: order + 1, last });
    }
    Ok(coeffs)
}

fn legendre_sum(coeffs: &[Complex64], c: f64) -> Complex64 {
    let (mut p_prev, mut p) = (1.0, c);
    let mut sum = coeffs[0];
    for (n, coeff) in coeffs.iter().enumerate().skip(1) {
        sum += coeff * p;
        let next = ((2 * n + 1) as f64 * c * p - n as f64 * p_prev) / (n + 1) as f64;
        p_prev = p;
        p = next;
    }
    sum
}

/// Surface pressure relative to the free field at `ka` for a source at angle
/// `acos(cos_theta)` from the receiver.
pub fn sphere_pressure(ka: f64, cos_theta: f64) -> Result<Complex64, HrtfError> {
    if !(ka.is_finite() && ka > 0.0) {
        return Err(HrtfError::Invalid(format!("ka = {ka} must be positive")));
    }
    Ok(legendre_sum(&series_coefficients(ka)?, cos_theta.clamp(-1.0, 1.0)))
}

/// Rigid-sphere HRTF set: for every direction and frequency the pressure at
/// the surface point facing `ear_direction`. The set is labelled `left` when
/// the ear points to `+y` or along the `xz` plane and `right` otherwise.
pub fn sphere_hrtf_oracle(
    radius: f64,
    ear_direction: &Vec3,
    directions: &[Direction],
    frequencies: &[f64],
) -> Result<HrtfSet, HrtfError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(HrtfError::Invalid(format!("radius {radius} must be positive")));
    }
    let norm = ear_direction.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(HrtfError::Invalid("ear direction must be a nonzero vector".into()));
    }
    if let Some(f) = frequencies.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
        return Err(HrtfError::Invalid(format!("frequency {f} must be positive")));
    }
    let ear = ear_direction / norm;
    let cosines: Vec<f64> = directions.iter().map(|d| d.unit_vector().dot(&ear)).collect();
    let per_freq: Vec<Vec<Complex64>> = frequencies
        .par_iter()
        .map(|&f| {
            let ka = 2.0 * std::f64::consts::PI * f / SPEED_OF_SOUND * radius;
            let coeffs = series_coefficients(ka)?;
            Ok(cosines.iter().map(|&c| legendre_sum(&coeffs, c.clamp(-1.0, 1.0))).collect())
        })
        .collect::<Result<_, HrtfError>>()?;
    let nf = frequencies.len();
    let mut values = Vec::with_capacity(directions.len() * nf);
    for d in 0..directions.len() {
        values.extend(per_freq.iter().map(|row| row[d]));
    }
    let label = if ear.y >= 0.0 { "left" } else { "right" };
    HrtfSet::new(directions.to_vec(), frequencies.to_vec(), values, label, radius)
}
