//! Discretised matching objective and its adjoint gradient.
//!
//! ```text
//! J(α) = γ · Δt Σ_k Σ_{p,q} α_p(t_k)ᵀ k_V(x_p(t_k), x_q(t_k)) α_q(t_k)  +  E(φ(1, source), target)
//! ```
//!
//! The gradient with respect to every momentum component is obtained by
//! running the RK4 scheme backwards: each stage's velocity map is
//! differentiated through both the transported points and the controls.

use super::flow::{rk4_step, transport};
use super::kernel::{kinetic_energy, kinetic_energy_grad, velocities_vjp};
use super::{LddmmError, MomentumField};
use crate::currents::{CurrentRep, CurrentsParams, TargetCurrent};
use crate::geom::Vec3;
use crate::mesh::SurfaceMesh;
use serde::{Deserialize, Serialize};

/// Objective value split into its parts; `j = gamma · reg + e`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub j: f64,
    /// `∫₀¹ ‖v(t)‖²_V dt`, before weighting by γ.
    pub reg: f64,
    pub e: f64,
}

/// `Δt Σ_k Σ_{p,q} α_pᵀ k_V(x_p, x_q) α_q` over the stored trajectories.
pub fn regularization_energy(field: &MomentumField) -> f64 {
    let h = 1.0 / field.n_steps() as f64;
    (0..field.n_steps())
        .map(|k| kinetic_energy(field.controls_at(k), field.momenta_at(k), field.sigma_v()))
        .sum::<f64>()
        * h
}

/// `J = γ · reg + E(flowed source, target)`.
pub fn objective_j(
    source: &SurfaceMesh,
    target: &CurrentRep,
    field: &MomentumField,
    params: &CurrentsParams,
) -> Result<Objective, LddmmError> {
    field.check()?;
    let moved = source.with_vertices(transport(source.vertices(), field));
    let e = crate::currents::data_term_e(&moved, target, params)?;
    let reg = regularization_energy(field);
    Ok(Objective {
        j: field.gamma() * reg + e,
        reg,
        e,
    })
}

/// A source mesh, the subset of its vertices acting as controls, and the
/// target it is matched against.
pub(crate) struct Problem<'a> {
    pub source: &'a SurfaceMesh,
    pub ctrl: Vec<usize>,
    pub target: TargetCurrent,
    pub sigma_v: f64,
    pub gamma: f64,
    pub n_steps: usize,
}

impl Problem<'_> {
    fn h(&self) -> f64 {
        1.0 / self.n_steps as f64
    }

    fn controls(&self, z: &[Vec3]) -> Vec<Vec3> {
        self.ctrl.iter().map(|&i| z[i]).collect()
    }

    pub fn zero_momenta(&self) -> Vec<Vec<Vec3>> {
        vec![vec![Vec3::zeros(); self.ctrl.len()]; self.n_steps]
    }

    pub fn evaluate(&self, momenta: &[Vec<Vec3>]) -> Result<Objective, LddmmError> {
        let h = self.h();
        let mut z = self.source.vertices().to_vec();
        let mut reg = 0.0;
        for alpha in momenta {
            reg += kinetic_energy(&self.controls(&z), alpha, self.sigma_v);
            z = rk4_step(&z, &self.ctrl, alpha, h, self.sigma_v).next;
        }
        reg *= h;
        let e = self.target.data_term(&self.source.with_vertices(z))?;
        let j = self.gamma * reg + e;
        if !j.is_finite() {
            return Err(LddmmError::NonFinite(format!(
                "objective not finite (reg = {reg}, E = {e})"
            )));
        }
        Ok(Objective { j, reg, e })
    }

    /// Objective and `∂J/∂α(t_k)` for every step and control.
    pub fn evaluate_with_gradient(
        &self,
        momenta: &[Vec<Vec3>],
    ) -> Result<(Objective, Vec<Vec<Vec3>>), LddmmError> {
        let h = self.h();
        let mut steps = Vec::with_capacity(momenta.len());
        let mut z = self.source.vertices().to_vec();
        let mut reg = 0.0;
        for alpha in momenta {
            reg += kinetic_energy(&self.controls(&z), alpha, self.sigma_v);
            let step = rk4_step(&z, &self.ctrl, alpha, h, self.sigma_v);
            z = step.next.clone();
            steps.push(step);
        }
        reg *= h;
        let (e, mut lambda) = self
            .target
            .data_term_and_gradient(&self.source.with_vertices(z))?;
        let j = self.gamma * reg + e;
        if !j.is_finite() {
            return Err(LddmmError::NonFinite(format!(
                "objective not finite (reg = {reg}, E = {e})"
            )));
        }

        let mut grad = vec![Vec::new(); momenta.len()];
        for (k, step) in steps.iter().enumerate().rev() {
            let alpha = &momenta[k];
            let [s1, s2, s3, s4] = &step.stages;
            let scaled = |a: f64, v: &[Vec3]| -> Vec<Vec3> { v.iter().map(|x| a * x).collect() };

            let mut g_z = lambda.clone();
            let mut g_alpha = vec![Vec3::zeros(); alpha.len()];
            let mut g_k1 = scaled(h / 6.0, &lambda);
            let mut g_k2 = scaled(h / 3.0, &lambda);
            let mut g_k3 = scaled(h / 3.0, &lambda);
            let g_k4 = scaled(h / 6.0, &lambda);

            // K4 = F(Z + h K3)
            let (gz4, ga4) = velocities_vjp(s4, &self.ctrl, alpha, self.sigma_v, &g_k4);
            accumulate(&mut g_alpha, &ga4, 1.0);
            accumulate(&mut g_z, &gz4, 1.0);
            accumulate(&mut g_k3, &gz4, h);
            // K3 = F(Z + h/2 K2)
            let (gz3, ga3) = velocities_vjp(s3, &self.ctrl, alpha, self.sigma_v, &g_k3);
            accumulate(&mut g_alpha, &ga3, 1.0);
            accumulate(&mut g_z, &gz3, 1.0);
            accumulate(&mut g_k2, &gz3, 0.5 * h);
            // K2 = F(Z + h/2 K1)
            let (gz2, ga2) = velocities_vjp(s2, &self.ctrl, alpha, self.sigma_v, &g_k2);
            accumulate(&mut g_alpha, &ga2, 1.0);
            accumulate(&mut g_z, &gz2, 1.0);
            accumulate(&mut g_k1, &gz2, 0.5 * h);
            // K1 = F(Z)
            let (gz1, ga1) = velocities_vjp(s1, &self.ctrl, alpha, self.sigma_v, &g_k1);
            accumulate(&mut g_alpha, &ga1, 1.0);
            accumulate(&mut g_z, &gz1, 1.0);

            // regularisation at t_k
            let (gx_r, ga_r) = kinetic_energy_grad(&self.controls(s1), alpha, self.sigma_v);
            accumulate(&mut g_alpha, &ga_r, self.gamma * h);
            for (&i, g) in self.ctrl.iter().zip(&gx_r) {
                g_z[i] += self.gamma * h * g;
            }

            grad[k] = g_alpha;
            lambda = g_z;
        }
        Ok((Objective { j, reg, e }, grad))
    }
}

fn accumulate(acc: &mut [Vec3], v: &[Vec3], a: f64) {
    for (x, y) in acc.iter_mut().zip(v) {
        *x += a * y;
    }
}
