//! Gradient-descent matcher.

use super::objective::{Objective, Problem};
use super::{LddmmError, MomentumField};
use crate::currents::{CurrentsKernel, CurrentsParams, TargetCurrent};
use crate::geom::Vec3;
use crate::mesh::{validate, SurfaceMesh};
use serde::{Deserialize, Serialize};

/// Optimizer and model settings. Kernel widths left as `None` are derived
/// from the meshes: `sigma_v` = 25% of the source bounding-box diagonal,
/// `sigma_w` = 10% of the target's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchParams {
    pub sigma_v: Option<f64>,
    pub sigma_w: Option<f64>,
    pub currents_kernel: CurrentsKernel,
    pub gamma: f64,
    pub n_steps: usize,
    pub max_iterations: usize,
    /// Stop once `‖∇J‖ ≤ grad_tol · ‖∇J(0)‖`.
    pub grad_tol: f64,
    /// Stop once an accepted step decreases `J` by at most `rel_j_tol · J`.
    pub rel_j_tol: f64,
    /// Sufficient-decrease constant of the backtracking line search.
    pub armijo_c: f64,
    pub max_halvings: usize,
    /// Use at most this many source vertices as control points (farthest-point
    /// subsampling). `None` uses every vertex.
    pub max_controls: Option<usize>,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            sigma_v: None,
            sigma_w: None,
            currents_kernel: CurrentsKernel::Gaussian,
            gamma: 0.01,
            n_steps: 10,
            max_iterations: 200,
            grad_tol: 1e-6,
            rel_j_tol: 1e-6,
            armijo_c: 1e-4,
            max_halvings: 30,
            max_controls: None,
        }
    }
}

/// Parameters actually used by a run, with every default resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub sigma_v: f64,
    pub sigma_w: f64,
    pub currents_kernel: CurrentsKernel,
    pub gamma: f64,
    pub n_steps: usize,
    pub max_iterations: usize,
    pub grad_tol: f64,
    pub rel_j_tol: f64,
    pub armijo_c: f64,
    pub max_halvings: usize,
    pub control_count: usize,
}

impl MatchParams {
    pub fn resolve(&self, source: &SurfaceMesh, target: &SurfaceMesh) -> Result<EffectiveParams, LddmmError> {
        let sigma_v = self.sigma_v.unwrap_or(0.25 * source.bbox_diagonal());
        let sigma_w = self.sigma_w.unwrap_or(0.1 * target.bbox_diagonal());
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(LddmmError::InvalidParams(format!("{name} must be positive, got {v}")))
            }
        };
        positive("sigma_v", sigma_v)?;
        positive("sigma_w", sigma_w)?;
        positive("gamma", self.gamma)?;
        positive("grad_tol", self.grad_tol)?;
        positive("rel_j_tol", self.rel_j_tol)?;
        positive("armijo_c", self.armijo_c)?;
        if self.n_steps == 0 {
            return Err(LddmmError::InvalidParams("n_steps must be at least 1".into()));
        }
        if self.armijo_c >= 1.0 {
            return Err(LddmmError::InvalidParams("armijo_c must be below 1".into()));
        }
        if self.max_halvings == 0 {
            return Err(LddmmError::InvalidParams("max_halvings must be at least 1".into()));
        }
        let control_count = match self.max_controls {
            Some(0) => return Err(LddmmError::InvalidParams("max_controls must be at least 1".into())),
            Some(n) => n.min(source.vertex_count()),
            None => source.vertex_count(),
        };
        Ok(EffectiveParams {
            sigma_v,
            sigma_w,
            currents_kernel: self.currents_kernel,
            gamma: self.gamma,
            n_steps: self.n_steps,
            max_iterations: self.max_iterations,
            grad_tol: self.grad_tol,
            rel_j_tol: self.rel_j_tol,
            armijo_c: self.armijo_c,
            max_halvings: self.max_halvings,
            control_count,
        })
    }
}

impl EffectiveParams {
    pub fn currents(&self) -> CurrentsParams {
        CurrentsParams {
            sigma_w: self.sigma_w,
            kernel: self.currents_kernel,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    RelativeJTolerance,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub source: String,
    pub target: String,
    pub iterations: usize,
    pub initial: Objective,
    #[serde(rename = "final")]
    pub final_: Objective,
    pub converged: bool,
    pub termination: Termination,
    pub initial_grad_norm: f64,
    pub final_grad_norm: f64,
    /// `J` after initialisation and after every accepted step.
    pub trace: Vec<f64>,
    pub params: EffectiveParams,
}

impl MatchReport {
    /// `1 − E_final / E_initial` (zero when the initial mismatch is zero).
    pub fn data_term_reduction(&self) -> f64 {
        if self.initial.e > 0.0 {
            1.0 - self.final_.e / self.initial.e
        } else {
            0.0
        }
    }
}

/// Deterministic farthest-point subsample of `count` vertex indices, starting
/// from vertex 0. Returned in ascending order.
pub fn farthest_point_sample(points: &[Vec3], count: usize) -> Vec<usize> {
    let count = count.min(points.len());
    if count == points.len() {
        return (0..points.len()).collect();
    }
    let mut chosen = Vec::with_capacity(count);
    let mut dist = vec![f64::INFINITY; points.len()];
    let mut next = 0;
    for _ in 0..count {
        chosen.push(next);
        let p = points[next];
        let mut best = (0, -1.0);
        for (i, q) in points.iter().enumerate() {
            dist[i] = dist[i].min((q - p).norm_squared());
            if dist[i] > best.1 {
                best = (i, dist[i]);
            }
        }
        next = best.0;
    }
    chosen.sort_unstable();
    chosen
}

fn grad_norm(g: &[Vec<Vec3>]) -> f64 {
    g.iter().flatten().map(|v| v.norm_squared()).sum::<f64>().sqrt()
}

/// Finds momenta minimising the discretised `J` by gradient descent with a
/// backtracking (Armijo) line search, starting from zero momenta.
pub fn match_surfaces(
    source: &SurfaceMesh,
    target: &SurfaceMesh,
    params: &MatchParams,
) -> Result<(MomentumField, MatchReport), LddmmError> {
    for (role, m) in [("source", source), ("target", target)] {
        let report = validate(m);
        if let Some(e) = report.errors.first() {
            return Err(LddmmError::InvalidInput(format!("{role} mesh: {} ({})", e.code, e.message)));
        }
    }
    let eff = params.resolve(source, target)?;
    let ctrl = farthest_point_sample(source.vertices(), eff.control_count);
    let problem = Problem {
        source,
        ctrl,
        target: TargetCurrent::from_mesh(target, eff.currents())?,
        sigma_v: eff.sigma_v,
        gamma: eff.gamma,
        n_steps: eff.n_steps,
    };

    let mut momenta = problem.zero_momenta();
    let (initial, mut grad) = problem.evaluate_with_gradient(&momenta)?;
    let g0 = grad_norm(&grad);
    let mut current = initial;
    let mut gnorm = g0;
    let mut trace = vec![initial.j];
    let mut iterations = 0;
    let max_g = grad.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    let mut step = if max_g > 0.0 { 0.1 * eff.sigma_v / max_g } else { 1.0 };

    let termination = loop {
        if gnorm <= eff.grad_tol * g0 || current.j == 0.0 {
            break Termination::GradientTolerance;
        }
        if iterations >= eff.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;

        let g2 = gnorm * gnorm;
        let mut accepted = None;
        for halving in 0..=eff.max_halvings {
            let trial: Vec<Vec<Vec3>> = momenta
                .iter()
                .zip(&grad)
                .map(|(a, g)| a.iter().zip(g).map(|(a, g)| a - step * g).collect())
                .collect();
            // a failed evaluation (non-finite or inconsistent E) is a rejected step
            if let Ok(obj) = problem.evaluate(&trial) {
                if obj.j <= current.j - eff.armijo_c * step * g2 {
                    accepted = Some((trial, obj, halving));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((trial, obj, halvings)) = accepted else {
            return Err(LddmmError::LineSearchFailed {
                iteration: iterations,
                halvings: eff.max_halvings,
                objective: current,
            });
        };

        let decrease = current.j - obj.j;
        momenta = trial;
        let (checked, new_grad) = problem.evaluate_with_gradient(&momenta)?;
        debug_assert_eq!(checked.j, obj.j);
        current = checked;
        grad = new_grad;
        gnorm = grad_norm(&grad);
        trace.push(current.j);
        if halvings == 0 {
            step *= 2.0;
        }
        if decrease <= eff.rel_j_tol * trace[trace.len() - 2] {
            break Termination::RelativeJTolerance;
        }
    };

    let controls: Vec<Vec3> = problem.ctrl.iter().map(|&i| source.vertices()[i]).collect();
    let field = MomentumField::from_momenta(controls, momenta, eff.sigma_v, eff.gamma)?.with_provenance(
        source.name().unwrap_or("source"),
        target.name().unwrap_or("target"),
    );
    let report = MatchReport {
        source: field.provenance.source.clone(),
        target: field.provenance.target.clone(),
        iterations,
        initial,
        final_: current,
        converged: termination != Termination::MaxIterations,
        termination,
        initial_grad_norm: g0,
        final_grad_norm: gnorm,
        trace,
        params: eff,
    };
    Ok((field, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::icosphere;

    #[test]
    fn matching_a_mesh_to_itself_stops_immediately() {
        let m = icosphere(2, 1.0);
        let (field, report) = match_surfaces(&m, &m, &MatchParams::default()).unwrap();
        assert!(report.iterations <= 2);
        assert!(report.converged);
        assert!(report.final_.e.abs() < 1e-12);
        assert!(field.max_momentum() < 1e-6);
    }

    #[test]
    fn resolves_scale_relative_defaults() {
        let s = icosphere(1, 1.0);
        let t = icosphere(1, 2.0);
        let eff = MatchParams::default().resolve(&s, &t).unwrap();
        assert!((eff.sigma_v - 0.25 * s.bbox_diagonal()).abs() < 1e-15);
        assert!((eff.sigma_w - 0.1 * t.bbox_diagonal()).abs() < 1e-15);
        assert_eq!(eff.control_count, s.vertex_count());
        let bad = MatchParams {
            gamma: 0.0,
            ..MatchParams::default()
        };
        assert!(bad.resolve(&s, &t).is_err());
        let bad = MatchParams {
            n_steps: 0,
            ..MatchParams::default()
        };
        assert!(bad.resolve(&s, &t).is_err());
    }

    #[test]
    fn farthest_point_sampling_spreads_out() {
        let m = icosphere(2, 1.0);
        let idx = farthest_point_sample(m.vertices(), 12);
        assert_eq!(idx.len(), 12);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        let mut min = f64::INFINITY;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                min = min.min((m.vertices()[i] - m.vertices()[j]).norm());
            }
        }
        assert!(min > 0.7, "{min}");
        assert_eq!(farthest_point_sample(m.vertices(), 1000).len(), m.vertex_count());
    }

    #[test]
    fn subsampled_controls_still_reduce_mismatch() {
        let s = icosphere(2, 1.0);
        let t = icosphere(2, 1.2);
        let params = MatchParams {
            max_controls: Some(30),
            max_iterations: 40,
            ..MatchParams::default()
        };
        let (field, report) = match_surfaces(&s, &t, &params).unwrap();
        assert_eq!(field.control_count(), 30);
        assert!(report.data_term_reduction() > 0.5, "{report:?}");
    }
}
