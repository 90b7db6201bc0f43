//! Head-related transfer function sets and their spatial analysis.
//!
//! An [`HrtfSet`] holds complex gains on a direction × frequency grid for one
//! ear. [`sfrs`] slices a set at one frequency into a spatial frequency
//! response surface (gain in dB over direction), [`spatial_correlation`]
//! compares two such surfaces and [`sphere_hrtf_oracle`] produces sets from
//! the analytic rigid-sphere scattering series.
//!
//! Directions are `(azimuth, elevation)` in degrees. Azimuth is measured
//! from `+x` towards `+y` and elevation from the `xy` plane towards `+z`, so
//! a left ear sits at azimuth 90°.

mod correlation;
mod grid;
mod sphere;

pub use correlation::{
    correlation_curve, solid_angle_weights, spatial_correlation, weighted_pearson, write_curve_csv,
    CorrelationPoint, Weighting, DEFAULT_LATTICE_SAMPLES,
};
pub use grid::{load_hrtf_set, parse_hrtf_set, save_hrtf_set, write_hrtf_set, GRID_MAGIC, GRID_VERSION};
pub use sphere::{
    sphere_hrtf_oracle, sphere_pressure, spherical_bessel_j, spherical_bessel_y, SPEED_OF_SOUND,
};

use crate::geom::Vec3;
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

/// Two directions closer than this (as unit vectors) are the same direction.
pub const DIRECTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HrtfError {
    #[error("failed to read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid HRTF set: {0}")]
    Invalid(String),
    #[error("frequency {f} Hz outside the set's range [{min}, {max}] Hz")]
    FrequencyOutOfRange { f: f64, min: f64, max: f64 },
    #[error("direction grids differ: {0}")]
    DirectionMismatch(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("scattering series not converged at ka = {ka} after {order} terms (last term {last:e})")]
    SeriesNotConverged { ka: f64, order: usize, last: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    pub az_deg: f64,
    pub el_deg: f64,
}

impl Direction {
    pub fn new(az_deg: f64, el_deg: f64) -> Self {
        Self { az_deg, el_deg }
    }

    pub fn unit_vector(&self) -> Vec3 {
        let (az, el) = (self.az_deg.to_radians(), self.el_deg.to_radians());
        Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
    }

    /// Direction of a (not necessarily unit) vector; azimuth in `(-180, 180]`.
    pub fn from_vector(v: &Vec3) -> Self {
        let n = v.norm();
        let el = (v.z / n).clamp(-1.0, 1.0).asin().to_degrees();
        let az = if v.x == 0.0 && v.y == 0.0 {
            0.0
        } else {
            v.y.atan2(v.x).to_degrees()
        };
        Self::new(az, el)
    }

    /// Regular grid: both poles plus rings every `el_step` degrees strictly
    /// between them, each ring sampled every `az_step` degrees from 0.
    pub fn grid(az_step: f64, el_step: f64) -> Vec<Self> {
        assert!(az_step > 0.0 && el_step > 0.0, "grid steps must be positive");
        let mut out = vec![Self::new(0.0, -90.0)];
        let rings = (180.0 / el_step).round() as usize;
        let per_ring = (360.0 / az_step).round() as usize;
        for r in 1..rings {
            let el = -90.0 + r as f64 * el_step;
            if el >= 90.0 {
                break;
            }
            for a in 0..per_ring {
                out.push(Self::new(a as f64 * az_step, el));
            }
        }
        out.push(Self::new(0.0, 90.0));
        out
    }
}

/// Complex gains on a direction × frequency grid for one ear.
#[derive(Clone, Debug, PartialEq)]
pub struct HrtfSet {
    directions: Vec<Direction>,
    frequencies: Vec<f64>,
    /// Row-major: `values[d * frequencies.len() + f]`.
    values: Vec<Complex64>,
    ear: String,
    radius: f64,
}

impl HrtfSet {
    /// Checks the invariants: at least one direction and frequency, no
    /// repeated direction, strictly ascending positive frequencies, finite
    /// values, a positive radius and a single-word ear label.
    pub fn new(
        directions: Vec<Direction>,
        frequencies: Vec<f64>,
        values: Vec<Complex64>,
        ear: impl Into<String>,
        radius: f64,
    ) -> Result<Self, HrtfError> {
        let ear = ear.into();
        if directions.is_empty() {
            return Err(HrtfError::Invalid("no directions".into()));
        }
        if frequencies.is_empty() {
            return Err(HrtfError::Invalid("no frequencies".into()));
        }
        if values.len() != directions.len() * frequencies.len() {
            return Err(HrtfError::Invalid(format!(
                "{} values for {} directions × {} frequencies",
                values.len(),
                directions.len(),
                frequencies.len()
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(HrtfError::Invalid(format!("radius {radius} must be positive")));
        }
        if ear.is_empty() || ear.chars().any(char::is_whitespace) {
            return Err(HrtfError::Invalid(format!("ear label {ear:?} must be a single word")));
        }
        for (i, f) in frequencies.iter().enumerate() {
            if !(f.is_finite() && *f > 0.0) {
                return Err(HrtfError::Invalid(format!("frequency {f} must be positive")));
            }
            if i > 0 && *f <= frequencies[i - 1] {
                return Err(HrtfError::Invalid(format!(
                    "frequencies not strictly ascending: {} then {f}",
                    frequencies[i - 1]
                )));
            }
        }
        let units = directions
            .iter()
            .map(|d| {
                if d.az_deg.is_finite() && d.el_deg.is_finite() && d.el_deg.abs() <= 90.0 {
                    Ok(d.unit_vector())
                } else {
                    Err(HrtfError::Invalid(format!(
                        "direction ({}, {}) is not a valid azimuth/elevation",
                        d.az_deg, d.el_deg
                    )))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some((i, j)) = first_duplicate(&units) {
            return Err(HrtfError::Invalid(format!(
                "directions {i} and {j} coincide at ({}, {})",
                directions[j].az_deg, directions[j].el_deg
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            let nf = frequencies.len();
            return Err(HrtfError::Invalid(format!(
                "non-finite value at direction {}, frequency {} Hz",
                k / nf,
                frequencies[k % nf]
            )));
        }
        Ok(Self {
            directions,
            frequencies,
            values,
            ear,
            radius,
        })
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn ear(&self) -> &str {
        &self.ear
    }

    /// Reference radius in meters.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn value(&self, direction: usize, frequency: usize) -> Complex64 {
        self.values[direction * self.frequencies.len() + frequency]
    }

    /// All frequencies for one direction.
    pub fn row(&self, direction: usize) -> &[Complex64] {
        let nf = self.frequencies.len();
        &self.values[direction * nf..(direction + 1) * nf]
    }
}

fn first_duplicate(units: &[Vec3]) -> Option<(usize, usize)> {
    // sort by z so that only a narrow band needs pairwise checks
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by(|&a, &b| units[a].z.total_cmp(&units[b].z));
    let mut found: Option<(usize, usize)> = None;
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if units[b].z - units[a].z > DIRECTION_TOLERANCE {
                break;
            }
            if (units[a] - units[b]).norm() < DIRECTION_TOLERANCE {
                let pair = (a.min(b), a.max(b));
                if found.is_none_or(|f| pair < f) {
                    found = Some(pair);
                }
            }
        }
    }
    found
}

/// Magnitude gain over direction at a single frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct SfrsMap {
    pub directions: Vec<Direction>,
    pub frequency: f64,
    pub gains_db: Vec<f64>,
}

/// `H(d, f)` for every direction, interpolating real and imaginary parts
/// linearly between the bracketing grid frequencies.
pub fn interpolate(set: &HrtfSet, f: f64) -> Result<Vec<Complex64>, HrtfError> {
    let freqs = set.frequencies();
    let (min, max) = (freqs[0], freqs[freqs.len() - 1]);
    if !(f >= min && f <= max) {
        return Err(HrtfError::FrequencyOutOfRange { f, min, max });
    }
    let n = set.directions().len();
    match freqs.binary_search_by(|g| g.total_cmp(&f)) {
        Ok(k) => Ok((0..n).map(|d| set.value(d, k)).collect()),
        Err(hi) => {
            let lo = hi - 1;
            let t = (f - freqs[lo]) / (freqs[hi] - freqs[lo]);
            Ok((0..n)
                .map(|d| {
                    let (a, b) = (set.value(d, lo), set.value(d, hi));
                    Complex64::new(a.re + t * (b.re - a.re), a.im + t * (b.im - a.im))
                })
                .collect())
        }
    }
}

/// `20 log10 |H(d, f)|`; fails if `f` is outside the set's frequency range
/// or some gain is zero.
pub fn sfrs(set: &HrtfSet, f: f64) -> Result<SfrsMap, HrtfError> {
    let h = interpolate(set, f)?;
    let gains_db: Vec<f64> = h.iter().map(|v| 20.0 * v.norm().log10()).collect();
    if let Some(d) = gains_db.iter().position(|g| !g.is_finite()) {
        return Err(HrtfError::NonFinite(format!(
            "zero gain at direction {d} ({}, {}) at {f} Hz",
            set.directions()[d].az_deg,
            set.directions()[d].el_deg
        )));
    }
    Ok(SfrsMap {
        directions: set.directions().to_vec(),
        frequency: f,
        gains_db,
    })
}

/// `az_deg,el_deg,gain_db` rows, gains to 1e-9 dB.
pub fn write_sfrs_csv(map: &SfrsMap) -> String {
    let mut out = String::from("az_deg,el_deg,gain_db\n");
    for (d, g) in map.directions.iter().zip(&map.gains_db) {
        writeln!(out, "{},{},{:.9}", d.az_deg, d.el_deg, g).unwrap();
    }
    out
}
