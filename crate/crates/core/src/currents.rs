//! Surfaces as currents.
//!
//! A triangulated surface is represented by its face barycenters `c_m` and
//! area-weighted normals `n_m = ½ (v1 − v0) × (v2 − v0)`. The inner product of
//! two such representations is
//!
//! ```text
//! ⟨A, B⟩ = Σ_p Σ_q k_W(c_p, c_q) (n_p · n_q)
//! ```
//!
//! and the mismatch between a moved surface and a target is the squared
//! norm `E = ⟨A,A⟩ − 2⟨A,B⟩ + ⟨B,B⟩`.
//!
//! Double sums are evaluated row by row in parallel; each row is summed
//! sequentially and the row totals are combined with
//! [`pairwise_sum`](crate::geom::pairwise_sum), so results do not depend on
//! the thread count.

use crate::geom::{pairwise_sum, Vec3};
use crate::mesh::{SurfaceMesh, DEGENERATE_AREA};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CurrentsError {
    #[error("face {face} is degenerate (area {area:e} m^2)")]
    DegenerateFace { face: usize, area: f64 },
    #[error("currents kernel width must be positive and finite, got {0}")]
    BadWidth(f64),
    #[error("data term is {value:e}, below the numerical floor {floor:e}")]
    NegativeDataTerm { value: f64, floor: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurrentsKernel {
    /// `exp(−‖x−y‖² / σ_W²)`
    #[default]
    Gaussian,
    /// `1 / (1 + ‖x−y‖² / σ_W²)`
    Cauchy,
}

impl CurrentsKernel {
    #[inline]
    fn value(self, d2: f64, inv_s2: f64) -> f64 {
        match self {
            CurrentsKernel::Gaussian => (-d2 * inv_s2).exp(),
            CurrentsKernel::Cauchy => 1.0 / (1.0 + d2 * inv_s2),
        }
    }

    /// Kernel value and the scalar `s` with `∇_x k(x, y) = s (x − y)`.
    #[inline]
    fn value_and_slope(self, d2: f64, inv_s2: f64) -> (f64, f64) {
        match self {
            CurrentsKernel::Gaussian => {
                let k = (-d2 * inv_s2).exp();
                (k, -2.0 * inv_s2 * k)
            }
            CurrentsKernel::Cauchy => {
                let k = 1.0 / (1.0 + d2 * inv_s2);
                (k, -2.0 * inv_s2 * k * k)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentsParams {
    /// Kernel length scale σ_W, meters.
    pub sigma_w: f64,
    #[serde(default)]
    pub kernel: CurrentsKernel,
}

impl CurrentsParams {
    pub fn gaussian(sigma_w: f64) -> Self {
        Self {
            sigma_w,
            kernel: CurrentsKernel::Gaussian,
        }
    }

    /// Default width: 10% of the target's bounding-box diagonal.
    pub fn default_for(target: &SurfaceMesh) -> Self {
        Self::gaussian(0.1 * target.bbox_diagonal())
    }

    pub fn check(&self) -> Result<(), CurrentsError> {
        if self.sigma_w > 0.0 && self.sigma_w.is_finite() {
            Ok(())
        } else {
            Err(CurrentsError::BadWidth(self.sigma_w))
        }
    }

    fn inv_s2(&self) -> f64 {
        1.0 / (self.sigma_w * self.sigma_w)
    }
}

/// Face centers and area-weighted normals of a surface.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentRep {
    centers: Vec<Vec3>,
    normals: Vec<Vec3>,
}

impl CurrentRep {
    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn source_face_count(&self) -> usize {
        self.centers.len()
    }

    pub fn total_area(&self) -> f64 {
        self.normals.iter().map(|n| n.norm()).sum()
    }
}

pub fn current_of(mesh: &SurfaceMesh) -> Result<CurrentRep, CurrentsError> {
    let mut centers = Vec::with_capacity(mesh.face_count());
    let mut normals = Vec::with_capacity(mesh.face_count());
    for m in 0..mesh.face_count() {
        let [a, b, c] = mesh.triangle(m);
        let n = 0.5 * (b - a).cross(&(c - a));
        let area = n.norm();
        if area.is_nan() || area < DEGENERATE_AREA {
            return Err(CurrentsError::DegenerateFace { face: m, area });
        }
        centers.push((a + b + c) / 3.0);
        normals.push(n);
    }
    Ok(CurrentRep { centers, normals })
}

/// Current of a moved mesh, without the degenerate-face check. Used inside
/// the optimizer where trial steps may momentarily squash a face.
fn current_unchecked(mesh: &SurfaceMesh) -> CurrentRep {
    let (centers, normals) = (0..mesh.face_count())
        .map(|m| {
            let [a, b, c] = mesh.triangle(m);
            ((a + b + c) / 3.0, 0.5 * (b - a).cross(&(c - a)))
        })
        .unzip();
    CurrentRep { centers, normals }
}

pub fn currents_inner(a: &CurrentRep, b: &CurrentRep, p: &CurrentsParams) -> f64 {
    let inv_s2 = p.inv_s2();
    let kernel = p.kernel;
    let rows: Vec<f64> = a
        .centers
        .par_iter()
        .zip(a.normals.par_iter())
        .map(|(cp, np)| {
            let mut s = 0.0;
            for (cq, nq) in b.centers.iter().zip(&b.normals) {
                s += kernel.value((cp - cq).norm_squared(), inv_s2) * np.dot(nq);
            }
            s
        })
        .collect();
    pairwise_sum(&rows)
}

/// A target current together with its cached squared norm.
#[derive(Clone, Debug)]
pub struct TargetCurrent {
    rep: CurrentRep,
    params: CurrentsParams,
    self_inner: f64,
}

impl TargetCurrent {
    pub fn new(rep: CurrentRep, params: CurrentsParams) -> Self {
        let self_inner = currents_inner(&rep, &rep, &params);
        Self {
            rep,
            params,
            self_inner,
        }
    }

    pub fn from_mesh(mesh: &SurfaceMesh, params: CurrentsParams) -> Result<Self, CurrentsError> {
        params.check()?;
        Ok(Self::new(current_of(mesh)?, params))
    }

    pub fn rep(&self) -> &CurrentRep {
        &self.rep
    }

    pub fn params(&self) -> &CurrentsParams {
        &self.params
    }

    /// `⟨B, B⟩`.
    pub fn norm_squared(&self) -> f64 {
        self.self_inner
    }

    /// Data term of `moved` against this target.
    pub fn data_term(&self, moved: &SurfaceMesh) -> Result<f64, CurrentsError> {
        let a = current_unchecked(moved);
        let aa = currents_inner(&a, &a, &self.params);
        let ab = currents_inner(&a, &self.rep, &self.params);
        clamp_floor(aa - 2.0 * ab + self.self_inner, self.roundoff_scale(&a))
    }

    /// Bound on `|⟨A,A⟩| + 2|⟨A,B⟩| + |⟨B,B⟩|` (kernels are at most 1), used
    /// to tell roundoff from a genuinely negative data term. The cached norm
    /// alone is not enough: a current whose faces cancel has zero norm.
    fn roundoff_scale(&self, a: &CurrentRep) -> f64 {
        let s = a.total_area() + self.rep.total_area();
        s * s
    }

    /// Data term and its gradient with respect to every vertex of `moved`.
    pub fn data_term_and_gradient(
        &self,
        moved: &SurfaceMesh,
    ) -> Result<(f64, Vec<Vec3>), CurrentsError> {
        let a = current_unchecked(moved);
        let inv_s2 = self.params.inv_s2();
        let kernel = self.params.kernel;
        let b = &self.rep;

        // Per face of A: contributions to ⟨A,A⟩ and ⟨A,B⟩ rows, and the
        // partial derivatives of E with respect to its center and normal.
        let per_face: Vec<(f64, f64, Vec3, Vec3)> = (0..a.centers.len())
            .into_par_iter()
            .map(|p| {
                let (cp, np) = (a.centers[p], a.normals[p]);
                let (mut row_aa, mut row_ab) = (0.0, 0.0);
                let (mut dc_aa, mut dc_ab) = (Vec3::zeros(), Vec3::zeros());
                let (mut dn_aa, mut dn_ab) = (Vec3::zeros(), Vec3::zeros());
                for (cq, nq) in a.centers.iter().zip(&a.normals) {
                    let diff = cp - cq;
                    let (k, slope) = kernel.value_and_slope(diff.norm_squared(), inv_s2);
                    let dot = np.dot(nq);
                    row_aa += k * dot;
                    dn_aa += k * nq;
                    dc_aa += (slope * dot) * diff;
                }
                for (cq, nq) in b.centers.iter().zip(&b.normals) {
                    let diff = cp - cq;
                    let (k, slope) = kernel.value_and_slope(diff.norm_squared(), inv_s2);
                    let dot = np.dot(nq);
                    row_ab += k * dot;
                    dn_ab += k * nq;
                    dc_ab += (slope * dot) * diff;
                }
                // the two sums are kept apart so identical surfaces cancel exactly
                let d_center = 2.0 * (dc_aa - dc_ab);
                let d_normal = 2.0 * (dn_aa - dn_ab);
                (row_aa, row_ab, d_center, d_normal)
            })
            .collect();

        let aa = pairwise_sum(&per_face.iter().map(|r| r.0).collect::<Vec<_>>());
        let ab = pairwise_sum(&per_face.iter().map(|r| r.1).collect::<Vec<_>>());
        let e = clamp_floor(aa - 2.0 * ab + self.self_inner, self.roundoff_scale(&a))?;

        let mut grad = vec![Vec3::zeros(); moved.vertex_count()];
        for (m, (_, _, d_center, d_normal)) in per_face.iter().enumerate() {
            let [i0, i1, i2] = moved.faces()[m];
            let [v0, v1, v2] = moved.triangle(m);
            let (e1, e2) = (v1 - v0, v2 - v0);
            // n = ½ e1 × e2  ⇒  ∂(n·g)/∂e1 = ½ e2 × g,  ∂(n·g)/∂e2 = ½ g × e1
            let g1 = 0.5 * e2.cross(d_normal);
            let g2 = 0.5 * d_normal.cross(&e1);
            let gc = d_center / 3.0;
            grad[i0] += gc - g1 - g2;
            grad[i1] += gc + g1;
            grad[i2] += gc + g2;
        }
        Ok((e, grad))
    }
}

fn clamp_floor(e: f64, scale: f64) -> Result<f64, CurrentsError> {
    if e >= 0.0 {
        return Ok(e);
    }
    let floor = -1e-12 * scale;
    if e > floor {
        Ok(0.0)
    } else {
        Err(CurrentsError::NegativeDataTerm { value: e, floor })
    }
}

/// `E = ‖current(moved) − target‖²`.
pub fn data_term_e(
    moved: &SurfaceMesh,
    target: &CurrentRep,
    p: &CurrentsParams,
) -> Result<f64, CurrentsError> {
    p.check()?;
    TargetCurrent::new(target.clone(), *p).data_term(moved)
}

/// Gradient of [`data_term_e`] with respect to the vertices of `moved`.
pub fn grad_data_term(
    moved: &SurfaceMesh,
    target: &CurrentRep,
    p: &CurrentsParams,
) -> Result<Vec<Vec3>, CurrentsError> {
    p.check()?;
    Ok(TargetCurrent::new(target.clone(), *p)
        .data_term_and_gradient(moved)?
        .1)
}
