//! Fixed-step RK4 transport through a momentum field.
//!
//! Within step `k` the momenta `α(t_k)` are held constant while the controls
//! and the transported points move together as one ODE system
//! `dZ_i/dt = Σ_m k_V(C_m, Z_i) α_m`, with `C` the control subset of `Z`.

use super::kernel::velocities;
use super::{LddmmError, MomentumField};
use crate::geom::Vec3;
use crate::mesh::SurfaceMesh;

/// Stage states of one RK4 step and the resulting state.
pub(crate) struct Rk4Step {
    /// `Z`, `Z + h/2 K1`, `Z + h/2 K2`, `Z + h K3`.
    pub stages: [Vec<Vec3>; 4],
    pub next: Vec<Vec3>,
}

fn gather(z: &[Vec3], ctrl: &[usize]) -> Vec<Vec3> {
    ctrl.iter().map(|&i| z[i]).collect()
}

fn axpy(z: &[Vec3], a: f64, k: &[Vec3]) -> Vec<Vec3> {
    z.iter().zip(k).map(|(z, k)| z + a * k).collect()
}

pub(crate) fn rk4_step(z: &[Vec3], ctrl: &[usize], alpha: &[Vec3], h: f64, sigma_v: f64) -> Rk4Step {
    let vel = |s: &[Vec3]| velocities(s, &gather(s, ctrl), alpha, sigma_v);
    let k1 = vel(z);
    let z2 = axpy(z, 0.5 * h, &k1);
    let k2 = vel(&z2);
    let z3 = axpy(z, 0.5 * h, &k2);
    let k3 = vel(&z3);
    let z4 = axpy(z, h, &k3);
    let k4 = vel(&z4);
    let next = z
        .iter()
        .enumerate()
        .map(|(i, z)| z + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    Rk4Step {
        stages: [z.to_vec(), z2, z3, z4],
        next,
    }
}

/// Number of whole steps corresponding to `t` in `[0, 1]`, rounding to the
/// nearest step.
pub fn snap_to_step(t: f64, n_steps: usize) -> Result<usize, LddmmError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(LddmmError::InvalidParams(format!("time {t} outside [0, 1]")));
    }
    Ok((t * n_steps as f64).round() as usize)
}

/// Transports `points` through the field from `t = 0` to `t_end` (snapped to
/// the step grid). Returns the positions after every step, starting with the
/// input.
pub fn integrate_flow(
    points: &[Vec3],
    field: &MomentumField,
    t_end: f64,
) -> Result<Vec<Vec<Vec3>>, LddmmError> {
    field.check()?;
    let steps = snap_to_step(t_end, field.n_steps())?;
    Ok(integrate_steps(points, field, steps))
}

pub(crate) fn integrate_steps(points: &[Vec3], field: &MomentumField, steps: usize) -> Vec<Vec<Vec3>> {
    let nc = field.control_count();
    let ctrl: Vec<usize> = (0..nc).collect();
    let h = 1.0 / field.n_steps() as f64;
    let mut path = Vec::with_capacity(steps + 1);
    path.push(points.to_vec());
    let mut z: Vec<Vec3> = Vec::with_capacity(nc + points.len());
    for k in 0..steps {
        z.clear();
        z.extend_from_slice(field.controls_at(k));
        z.extend_from_slice(path.last().unwrap());
        let step = rk4_step(&z, &ctrl, field.momenta_at(k), h, field.sigma_v());
        path.push(step.next[nc..].to_vec());
    }
    path
}

/// Final positions after the full flow `t: 0 → 1`.
pub fn transport(points: &[Vec3], field: &MomentumField) -> Vec<Vec3> {
    integrate_steps(points, field, field.n_steps())
        .pop()
        .expect("path has at least the initial state")
}

/// Runs the flow backwards from `t = 1` to `t = 0`: steps in reverse order,
/// controls starting from the stored end positions, momenta negated.
pub fn integrate_backward(points: &[Vec3], field: &MomentumField) -> Result<Vec<Vec3>, LddmmError> {
    field.check()?;
    let nc = field.control_count();
    let ctrl: Vec<usize> = (0..nc).collect();
    let h = 1.0 / field.n_steps() as f64;
    let mut y = points.to_vec();
    for k in (0..field.n_steps()).rev() {
        let mut z = field.controls_at(k + 1).to_vec();
        z.extend_from_slice(&y);
        let neg: Vec<Vec3> = field.momenta_at(k).iter().map(|a| -a).collect();
        let step = rk4_step(&z, &ctrl, &neg, h, field.sigma_v());
        y = step.next[nc..].to_vec();
    }
    Ok(y)
}

/// Transports the mesh vertices through each field in turn; connectivity is
/// unchanged.
pub fn apply_flow(mesh: &SurfaceMesh, fields: &[MomentumField]) -> Result<SurfaceMesh, LddmmError> {
    let mut points = mesh.vertices().to_vec();
    for f in fields {
        f.check()?;
        points = transport(&points, f);
    }
    if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(LddmmError::NonFinite("flow produced non-finite vertices".into()));
    }
    Ok(mesh.with_vertices(points))
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    /// Requested time snapped to the step grid.
    pub time: f64,
    pub step: usize,
    pub mesh: SurfaceMesh,
    /// Arc length of each vertex's discrete trajectory from `t = 0`.
    pub displacement: Vec<f64>,
}

/// Meshes at the requested times with per-vertex cumulative displacement.
pub fn flow_snapshots(
    mesh: &SurfaceMesh,
    field: &MomentumField,
    times: &[f64],
) -> Result<Vec<Snapshot>, LddmmError> {
    field.check()?;
    let t = field.n_steps();
    let steps = times
        .iter()
        .map(|&s| snap_to_step(s, t))
        .collect::<Result<Vec<_>, _>>()?;
    let last = steps.iter().copied().max().unwrap_or(0);
    let path = integrate_steps(mesh.vertices(), field, last);

    let mut arc = vec![vec![0.0; mesh.vertex_count()]; last + 1];
    for k in 1..=last {
        for i in 0..mesh.vertex_count() {
            arc[k][i] = arc[k - 1][i] + (path[k][i] - path[k - 1][i]).norm();
        }
    }
    Ok(steps
        .into_iter()
        .map(|k| Snapshot {
            time: k as f64 / t as f64,
            step: k,
            mesh: mesh.with_vertices(path[k].clone()),
            displacement: arc[k].clone(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::icosphere;

    fn one_control_field(alpha: Vec3, steps: usize) -> MomentumField {
        MomentumField::from_momenta(vec![Vec3::zeros()], vec![vec![alpha]; steps], 0.5, 0.01).unwrap()
    }

    #[test]
    fn zero_field_is_identity() {
        let m = icosphere(1, 1.0);
        let f = MomentumField::zero(m.vertices().to_vec(), 4, 0.5, 0.01).unwrap();
        for t in [0.0, 0.25, 0.5, 1.0] {
            let path = integrate_flow(m.vertices(), &f, t).unwrap();
            assert_eq!(path.last().unwrap().as_slice(), m.vertices());
        }
    }

    #[test]
    fn t_zero_returns_input() {
        let f = one_control_field(Vec3::new(1.0, 0.0, 0.0), 5);
        let pts = vec![Vec3::new(0.3, 0.1, 0.0)];
        let path = integrate_flow(&pts, &f, 0.0).unwrap();
        assert_eq!(path, vec![pts]);
    }

    #[test]
    fn controls_reproduce_their_trajectory() {
        let m = icosphere(1, 1.0);
        let n = m.vertex_count();
        let momenta: Vec<Vec<Vec3>> = (0..3)
            .map(|k| (0..n).map(|i| Vec3::new((i % 3) as f64, k as f64, -(i as f64) / n as f64) * 0.1).collect())
            .collect();
        let f = MomentumField::from_momenta(m.vertices().to_vec(), momenta, 0.6, 0.01).unwrap();
        let end = transport(m.vertices(), &f);
        assert_eq!(end.as_slice(), f.controls_at(3));
    }

    #[test]
    fn single_particle_moves_in_a_straight_line() {
        // a control carried by its own momentum: dx/dt = α exactly
        let a = Vec3::new(0.3, -0.1, 0.2);
        let f = one_control_field(a, 20);
        let end = transport(&[Vec3::zeros()], &f);
        assert!((end[0] - a).norm() < 1e-12);
    }

    #[test]
    fn time_outside_unit_interval() {
        let f = one_control_field(Vec3::x(), 2);
        assert!(integrate_flow(&[Vec3::zeros()], &f, 1.5).is_err());
        assert!(integrate_flow(&[Vec3::zeros()], &f, f64::NAN).is_err());
        assert_eq!(snap_to_step(0.26, 4).unwrap(), 1);
    }

    #[test]
    fn snapshots_monotone_and_consistent() {
        let m = icosphere(1, 1.0);
        let f = MomentumField::from_momenta(
            vec![Vec3::new(0.0, 0.0, 1.0)],
            vec![vec![Vec3::new(0.2, 0.0, 0.1)]; 10],
            0.7,
            0.01,
        )
        .unwrap();
        let times = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        let snaps = flow_snapshots(&m, &f, &times).unwrap();
        assert_eq!(snaps[0].mesh, m);
        assert!(snaps[0].displacement.iter().all(|&d| d == 0.0));
        for w in snaps.windows(2) {
            for (a, b) in w[0].displacement.iter().zip(&w[1].displacement) {
                assert!(b >= a);
            }
        }
        let full = apply_flow(&m, std::slice::from_ref(&f)).unwrap();
        assert_eq!(snaps.last().unwrap().mesh, full);
    }

    #[test]
    fn apply_flow_composes() {
        let m = icosphere(1, 0.5);
        let f1 = one_control_field(Vec3::new(0.1, 0.0, 0.0), 4);
        let f2 = MomentumField::from_momenta(
            vec![Vec3::new(0.0, 0.5, 0.0)],
            vec![vec![Vec3::new(0.0, 0.0, -0.2)]; 3],
            0.4,
            0.01,
        )
        .unwrap();
        assert_eq!(apply_flow(&m, &[]).unwrap(), m);
        let both = apply_flow(&m, &[f1.clone(), f2.clone()]).unwrap();
        let seq = apply_flow(&apply_flow(&m, &[f1]).unwrap(), &[f2]).unwrap();
        assert_eq!(both, seq);
    }

    #[test]
    fn backward_undoes_forward() {
        let m = icosphere(1, 1.0);
        let f = MomentumField::from_momenta(
            vec![Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.5, 0.0, -0.5)],
            vec![vec![Vec3::new(0.2, 0.0, 0.1), Vec3::new(0.0, 0.3, 0.0)]; 20],
            0.7,
            0.01,
        )
        .unwrap();
        let fwd = transport(m.vertices(), &f);
        let back = integrate_backward(&fwd, &f).unwrap();
        let err = back
            .iter()
            .zip(m.vertices())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }
}
