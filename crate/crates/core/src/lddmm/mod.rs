//! Flows of diffeomorphisms driven by control-point momenta through the
//! Cauchy kernel, the matching objective and the matcher.

mod field;
mod flow;
mod kernel;
mod matching;
mod objective;

pub use field::{MomentumField, Provenance, FIELD_FORMAT, FIELD_VERSION};
pub use flow::{
    apply_flow, flow_snapshots, integrate_backward, integrate_flow, snap_to_step, transport, Snapshot,
};
pub use kernel::{cauchy_kernel, velocity_at};
pub use matching::{
    farthest_point_sample, match_surfaces, EffectiveParams, MatchParams, MatchReport, Termination,
};
pub use objective::{objective_j, regularization_energy, Objective};

use crate::currents::CurrentsError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LddmmError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid momentum field: {0}")]
    InvalidField(String),
    #[error("non-finite values: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Currents(#[from] CurrentsError),
    #[error(
        "line search failed at iteration {iteration} after {halvings} halvings \
         (J = {:e}, reg = {:e}, E = {:e})",
        objective.j, objective.reg, objective.e
    )]
    LineSearchFailed {
        iteration: usize,
        halvings: usize,
        objective: Objective,
    },
    #[error("malformed momentum field file: {0}")]
    Format(String),
    #[error("failed to read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Test-only access to the internal objective for finite-difference checks.
#[doc(hidden)]
pub mod testing {
    use super::objective::Problem;
    use super::{LddmmError, Objective};
    use crate::currents::{CurrentsParams, TargetCurrent};
    use crate::geom::Vec3;
    use crate::mesh::SurfaceMesh;

    /// Objective and analytic momentum gradient with every source vertex as a
    /// control point.
    pub fn objective_and_gradient(
        source: &SurfaceMesh,
        target: &SurfaceMesh,
        currents: CurrentsParams,
        sigma_v: f64,
        gamma: f64,
        momenta: &[Vec<Vec3>],
    ) -> Result<(Objective, Vec<Vec<Vec3>>), LddmmError> {
        let problem = Problem {
            source,
            ctrl: (0..source.vertex_count()).collect(),
            target: TargetCurrent::from_mesh(target, currents)?,
            sigma_v,
            gamma,
            n_steps: momenta.len(),
        };
        problem.evaluate_with_gradient(momenta)
    }
}
