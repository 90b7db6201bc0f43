//! [`MomentumField`] and its file format.
//!
//! A field file is a JSON document:
//!
//! ```text
//! {
//!   "format": "morpho-momentum-field",
//!   "version": 1,
//!   "sigma_v": <m>,  "gamma": <1>,  "n_steps": T,
//!   "provenance": { "source": "...", "target": "..." },
//!   "control_trajectories": [ T+1 × N_c × [x, y, z] ],
//!   "momenta":              [ T   × N_c × [x, y, z] ]
//! }
//! ```
//!
//! Numbers are written in shortest round-trip form, so reading a written
//! file reproduces every value bit for bit.

use super::flow::rk4_step;
use super::LddmmError;
use crate::geom::Vec3;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const FIELD_FORMAT: &str = "morpho-momentum-field";
pub const FIELD_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub target: String,
}

/// Control-point trajectories and per-step momenta; together with `sigma_v`
/// they determine a flow of diffeomorphisms on `[0, 1]` discretised into
/// `n_steps` equal steps.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumField {
    pub(crate) trajectories: Vec<Vec<Vec3>>,
    pub(crate) momenta: Vec<Vec<Vec3>>,
    pub(crate) sigma_v: f64,
    pub(crate) gamma: f64,
    pub provenance: Provenance,
}

impl MomentumField {
    /// Builds a field from initial control points and momenta by integrating
    /// the control trajectories.
    pub fn from_momenta(
        controls: Vec<Vec3>,
        momenta: Vec<Vec<Vec3>>,
        sigma_v: f64,
        gamma: f64,
    ) -> Result<Self, LddmmError> {
        let trajectories = integrate_controls(&controls, &momenta, sigma_v);
        let field = Self {
            trajectories,
            momenta,
            sigma_v,
            gamma,
            provenance: Provenance::default(),
        };
        field.check()?;
        Ok(field)
    }

    /// Identity flow: all momenta zero.
    pub fn zero(controls: Vec<Vec3>, n_steps: usize, sigma_v: f64, gamma: f64) -> Result<Self, LddmmError> {
        let n = controls.len();
        Self::from_momenta(controls, vec![vec![Vec3::zeros(); n]; n_steps], sigma_v, gamma)
    }

    pub fn with_provenance(mut self, source: impl Into<String>, target: impl Into<String>) -> Self {
        self.provenance = Provenance {
            source: source.into(),
            target: target.into(),
        };
        self
    }

    pub fn n_steps(&self) -> usize {
        self.momenta.len()
    }

    pub fn control_count(&self) -> usize {
        self.trajectories.first().map_or(0, |c| c.len())
    }

    pub fn sigma_v(&self) -> f64 {
        self.sigma_v
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Control positions at step `k`, `0 ≤ k ≤ T`.
    pub fn controls_at(&self, k: usize) -> &[Vec3] {
        &self.trajectories[k]
    }

    pub fn control_trajectories(&self) -> &[Vec<Vec3>] {
        &self.trajectories
    }

    /// Momenta held during step `k`, `0 ≤ k < T`.
    pub fn momenta_at(&self, k: usize) -> &[Vec3] {
        &self.momenta[k]
    }

    pub fn momenta(&self) -> &[Vec<Vec3>] {
        &self.momenta
    }

    /// Largest momentum magnitude over all steps and controls.
    pub fn max_momentum(&self) -> f64 {
        self.momenta
            .iter()
            .flatten()
            .map(|a| a.norm())
            .fold(0.0, f64::max)
    }

    /// Structural checks: shapes, positivity and finiteness.
    pub fn check(&self) -> Result<(), LddmmError> {
        let t = self.momenta.len();
        if t == 0 {
            return Err(LddmmError::InvalidField("field needs at least one time step".into()));
        }
        if self.trajectories.len() != t + 1 {
            return Err(LddmmError::InvalidField(format!(
                "{} trajectory samples for {t} steps",
                self.trajectories.len()
            )));
        }
        let n = self.trajectories[0].len();
        if self.trajectories.iter().any(|c| c.len() != n) || self.momenta.iter().any(|a| a.len() != n) {
            return Err(LddmmError::InvalidField("inconsistent control counts".into()));
        }
        if !(self.sigma_v > 0.0 && self.sigma_v.is_finite()) {
            return Err(LddmmError::InvalidField(format!("sigma_v = {}", self.sigma_v)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(LddmmError::InvalidField(format!("gamma = {}", self.gamma)));
        }
        let finite = self
            .trajectories
            .iter()
            .chain(&self.momenta)
            .flatten()
            .all(|v| v.iter().all(|c| c.is_finite()));
        if !finite {
            return Err(LddmmError::NonFinite("momentum field contains non-finite values".into()));
        }
        Ok(())
    }

    /// Largest deviation between the stored trajectories and those obtained
    /// by re-integrating from the stored initial controls, relative to the
    /// control cloud's extent.
    pub fn self_consistency_error(&self) -> f64 {
        let again = integrate_controls(&self.trajectories[0], &self.momenta, self.sigma_v);
        let scale = crate::geom::Aabb::of_points(self.trajectories.iter().flatten())
            .map_or(1.0, |b| b.diagonal().max(f64::MIN_POSITIVE));
        again
            .iter()
            .flatten()
            .zip(self.trajectories.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn to_json(&self) -> String {
        let file = FieldFile {
            format: FIELD_FORMAT.into(),
            version: FIELD_VERSION,
            sigma_v: self.sigma_v,
            gamma: self.gamma,
            n_steps: self.n_steps(),
            provenance: self.provenance.clone(),
            control_trajectories: to_arrays(&self.trajectories),
            momenta: to_arrays(&self.momenta),
        };
        serde_json::to_string_pretty(&file).expect("field serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, LddmmError> {
        let file: FieldFile =
            serde_json::from_str(text).map_err(|e| LddmmError::Format(e.to_string()))?;
        if file.format != FIELD_FORMAT {
            return Err(LddmmError::Format(format!("unexpected format tag '{}'", file.format)));
        }
        if file.version != FIELD_VERSION {
            return Err(LddmmError::Format(format!("unsupported version {}", file.version)));
        }
        if file.momenta.len() != file.n_steps {
            return Err(LddmmError::Format(format!(
                "n_steps = {} but {} momentum steps stored",
                file.n_steps,
                file.momenta.len()
            )));
        }
        let field = Self {
            trajectories: from_arrays(file.control_trajectories),
            momenta: from_arrays(file.momenta),
            sigma_v: file.sigma_v,
            gamma: file.gamma,
            provenance: file.provenance,
        };
        field.check()?;
        Ok(field)
    }

    pub fn save(&self, path: &Path) -> Result<(), LddmmError> {
        std::fs::write(path, self.to_json()).map_err(|source| LddmmError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LddmmError> {
        let text = std::fs::read_to_string(path).map_err(|source| LddmmError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

pub(crate) fn integrate_controls(controls: &[Vec3], momenta: &[Vec<Vec3>], sigma_v: f64) -> Vec<Vec<Vec3>> {
    let h = 1.0 / momenta.len().max(1) as f64;
    let ctrl: Vec<usize> = (0..controls.len()).collect();
    let mut out = Vec::with_capacity(momenta.len() + 1);
    out.push(controls.to_vec());
    for alpha in momenta {
        let next = rk4_step(out.last().unwrap(), &ctrl, alpha, h, sigma_v).next;
        out.push(next);
    }
    out
}

#[derive(Serialize, Deserialize)]
struct FieldFile {
    format: String,
    version: u32,
    sigma_v: f64,
    gamma: f64,
    n_steps: usize,
    #[serde(default)]
    provenance: Provenance,
    control_trajectories: Vec<Vec<[f64; 3]>>,
    momenta: Vec<Vec<[f64; 3]>>,
}

fn to_arrays(v: &[Vec<Vec3>]) -> Vec<Vec<[f64; 3]>> {
    v.iter()
        .map(|row| row.iter().map(|p| [p.x, p.y, p.z]).collect())
        .collect()
}

fn from_arrays(v: Vec<Vec<[f64; 3]>>) -> Vec<Vec<Vec3>> {
    v.into_iter()
        .map(|row| row.into_iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect())
        .collect()
}
