use crate::geom::Vec3;
use rayon::prelude::*;

/// `k_V(x, y) = 1 / (1 + ‖x − y‖² / σ_V²)`
#[inline]
pub fn cauchy_kernel(x: &Vec3, y: &Vec3, sigma_v: f64) -> f64 {
    1.0 / (1.0 + (x - y).norm_squared() / (sigma_v * sigma_v))
}

/// Velocity at `x` of the field carried by `controls` with `momenta`:
/// `Σ_n k_V(x_n, x) α_n`.
pub fn velocity_at(x: &Vec3, controls: &[Vec3], momenta: &[Vec3], sigma_v: f64) -> Vec3 {
    assert_eq!(controls.len(), momenta.len());
    let inv_s2 = 1.0 / (sigma_v * sigma_v);
    let mut v = Vec3::zeros();
    for (c, a) in controls.iter().zip(momenta) {
        v += a / (1.0 + (x - c).norm_squared() * inv_s2);
    }
    v
}

/// [`velocity_at`] for every point. Each point's sum runs over the controls
/// in order, so the result is independent of the thread count.
pub(crate) fn velocities(points: &[Vec3], controls: &[Vec3], momenta: &[Vec3], sigma_v: f64) -> Vec<Vec3> {
    points
        .par_iter()
        .map(|x| velocity_at(x, controls, momenta, sigma_v))
        .collect()
}

/// Vector-Jacobian product of the velocity map
/// `F(Z)_i = Σ_m k_V(C_m, Z_i) α_m` with `C_m = Z[ctrl[m]]`.
///
/// Given the cotangent `cot` (one 3-vector per point), returns the cotangent
/// with respect to `Z` (direct and through the controls) and `α`.
pub(crate) fn velocities_vjp(
    points: &[Vec3],
    ctrl: &[usize],
    momenta: &[Vec3],
    sigma_v: f64,
    cot: &[Vec3],
) -> (Vec<Vec3>, Vec<Vec3>) {
    let inv_s2 = 1.0 / (sigma_v * sigma_v);
    let controls: Vec<Vec3> = ctrl.iter().map(|&i| points[i]).collect();

    // ∂/∂Z_i through its own position: Σ_m (G_i·α_m) ∇κ(Z_i − C_m)
    let mut g_points: Vec<Vec3> = points
        .par_iter()
        .zip(cot.par_iter())
        .map(|(z, g)| {
            let mut acc = Vec3::zeros();
            for (c, a) in controls.iter().zip(momenta) {
                let r = z - c;
                let k = 1.0 / (1.0 + r.norm_squared() * inv_s2);
                acc += (-2.0 * inv_s2 * k * k * g.dot(a)) * r;
            }
            acc
        })
        .collect();

    // ∂/∂C_m and ∂/∂α_m: sums over points
    let per_control: Vec<(Vec3, Vec3)> = controls
        .par_iter()
        .zip(momenta.par_iter())
        .map(|(c, a)| {
            let mut g_c = Vec3::zeros();
            let mut g_a = Vec3::zeros();
            for (z, g) in points.iter().zip(cot) {
                let r = c - z;
                let k = 1.0 / (1.0 + r.norm_squared() * inv_s2);
                g_a += k * g;
                g_c += (-2.0 * inv_s2 * k * k * g.dot(a)) * r;
            }
            (g_c, g_a)
        })
        .collect();

    let mut g_alpha = Vec::with_capacity(ctrl.len());
    for (&i, (g_c, g_a)) in ctrl.iter().zip(per_control) {
        g_points[i] += g_c;
        g_alpha.push(g_a);
    }
    (g_points, g_alpha)
}

/// `Σ_p Σ_q α_pᵀ k_V(x_p, x_q) α_q` for one time step.
pub(crate) fn kinetic_energy(controls: &[Vec3], momenta: &[Vec3], sigma_v: f64) -> f64 {
    let v = velocities(controls, controls, momenta, sigma_v);
    let terms: Vec<f64> = v.iter().zip(momenta).map(|(v, a)| v.dot(a)).collect();
    crate::geom::pairwise_sum(&terms)
}

/// Gradient of [`kinetic_energy`] with respect to the control positions and
/// the momenta.
pub(crate) fn kinetic_energy_grad(
    controls: &[Vec3],
    momenta: &[Vec3],
    sigma_v: f64,
) -> (Vec<Vec3>, Vec<Vec3>) {
    let inv_s2 = 1.0 / (sigma_v * sigma_v);
    controls
        .par_iter()
        .zip(momenta.par_iter())
        .map(|(cp, ap)| {
            let mut g_x = Vec3::zeros();
            let mut g_a = Vec3::zeros();
            for (cq, aq) in controls.iter().zip(momenta) {
                let r = cp - cq;
                let k = 1.0 / (1.0 + r.norm_squared() * inv_s2);
                g_a += 2.0 * k * aq;
                g_x += (-4.0 * inv_s2 * k * k * ap.dot(aq)) * r;
            }
            (g_x, g_a)
        })
        .unzip()
}
