//! Weighted spatial correlation between SFRS maps.
//!
//! The correlation is Pearson's coefficient on the dB gains. By default each
//! direction is weighted by the solid angle of its Voronoi cell on the unit
//! sphere, so dense patches of a non-uniform grid do not dominate. The cells
//! are measured by assigning the points of a Fibonacci lattice to their
//! nearest grid direction.

use super::{sfrs, Direction, HrtfError, HrtfSet, SfrsMap};
use crate::geom::Vec3;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Lattice size for the solid-angle weights. Each lattice point stands for
/// `4π / 40000 ≈ 3.1e-4` sr.
pub const DEFAULT_LATTICE_SAMPLES: usize = 40_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// Voronoi solid angles measured on a Fibonacci lattice of this size.
    SolidAngle { samples: usize },
    /// Plain Pearson correlation.
    Uniform,
}

impl Default for Weighting {
    fn default() -> Self {
        Weighting::SolidAngle {
            samples: DEFAULT_LATTICE_SAMPLES,
        }
    }
}

impl Weighting {
    pub fn weights(&self, directions: &[Direction]) -> Vec<f64> {
        match *self {
            Weighting::SolidAngle { samples } => solid_angle_weights(directions, samples),
            Weighting::Uniform => vec![1.0; directions.len()],
        }
    }
}

fn fibonacci_point(i: usize, n: usize) -> Vec3 {
    let golden = PI * (3.0 - 5f64.sqrt());
    let z = 1.0 - (2 * i + 1) as f64 / n as f64;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = golden * i as f64;
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Approximate solid angle (sr) of each direction's Voronoi cell; the
/// weights sum to `4π`. Lattice points equidistant from two directions go to
/// the lower index.
pub fn solid_angle_weights(directions: &[Direction], samples: usize) -> Vec<f64> {
    assert!(samples > 0, "lattice needs at least one point");
    let units: Vec<Vec3> = directions.iter().map(Direction::unit_vector).collect();
    let owners: Vec<usize> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let p = fibonacci_point(i, samples);
            let mut best = 0;
            let mut best_dot = f64::NEG_INFINITY;
            for (d, u) in units.iter().enumerate() {
                let dot = p.dot(u);
                if dot > best_dot {
                    best = d;
                    best_dot = dot;
                }
            }
            best
        })
        .collect();
    let mut counts = vec![0usize; directions.len()];
    for o in owners {
        counts[o] += 1;
    }
    let cell = 4.0 * PI / samples as f64;
    counts.into_iter().map(|c| c as f64 * cell).collect()
}

/// Weighted Pearson correlation clamped to `[-1, 1]`. `None` when either
/// series is constant over the positively weighted entries.
pub fn weighted_pearson(x: &[f64], y: &[f64], w: &[f64]) -> Option<f64> {
    assert!(x.len() == y.len() && x.len() == w.len(), "length mismatch");
    let live = || (0..x.len()).filter(|&i| w[i] > 0.0);
    let first = live().next()?;
    if live().all(|i| x[i] == x[first]) || live().all(|i| y[i] == y[first]) {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(x, w)| w * x).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(y, w)| w * y).sum::<f64>() / sw;
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        cov += w[i] * (dx * dy);
        vx += w[i] * (dx * dx);
        vy += w[i] * (dy * dy);
    }
    if !(vx > 0.0 && vy > 0.0) {
        return None;
    }
    Some((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

fn check_same_directions(a: &[Direction], b: &[Direction]) -> Result<(), HrtfError> {
    if a.len() != b.len() {
        return Err(HrtfError::DirectionMismatch(format!(
            "{} directions against {}",
            a.len(),
            b.len()
        )));
    }
    if let Some(i) = (0..a.len()).find(|&i| a[i] != b[i]) {
        return Err(HrtfError::DirectionMismatch(format!(
            "direction {i} is ({}, {}) in one and ({}, {}) in the other",
            a[i].az_deg, a[i].el_deg, b[i].az_deg, b[i].el_deg
        )));
    }
    Ok(())
}

/// Correlation of two maps on the same direction list; `Ok(None)` when it
/// is undefined because one map has no spatial variation.
pub fn spatial_correlation(a: &SfrsMap, b: &SfrsMap, weighting: Weighting) -> Result<Option<f64>, HrtfError> {
    check_same_directions(&a.directions, &b.directions)?;
    let w = weighting.weights(&a.directions);
    Ok(weighted_pearson(&a.gains_db, &b.gains_db, &w))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationPoint {
    pub frequency: f64,
    pub correlation: Option<f64>,
}

/// SFRS correlation between two sets at each requested frequency, in input
/// order.
pub fn correlation_curve(
    a: &HrtfSet,
    b: &HrtfSet,
    freqs: &[f64],
    weighting: Weighting,
) -> Result<Vec<CorrelationPoint>, HrtfError> {
    check_same_directions(a.directions(), b.directions())?;
    let w = weighting.weights(a.directions());
    freqs
        .par_iter()
        .map(|&f| {
            let (sa, sb) = (sfrs(a, f)?, sfrs(b, f)?);
            Ok(CorrelationPoint {
                frequency: f,
                correlation: weighted_pearson(&sa.gains_db, &sb.gains_db, &w),
            })
        })
        .collect()
}

/// `f_hz,correlation` rows, correlations to 1e-12; undefined values are
/// written as `undefined`.
pub fn write_curve_csv(curve: &[CorrelationPoint]) -> String {
    let mut out = String::from("f_hz,correlation\n");
    for p in curve {
        match p.correlation {
            Some(c) => writeln!(out, "{},{:.12}", p.frequency, c).unwrap(),
            None => writeln!(out, "{},undefined", p.frequency).unwrap(),
        }
    }
    out
}
