//! Diffeomorphic matching of triangulated surfaces (LDDMM with a currents
//! data term), the ear / head-and-torso shape-transfer pipelines built on it,
//! and spatial analysis of head-related transfer functions.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`] : surface meshes, OFF / ASCII-PLY IO, validation and rigid
//!   translation alignment.
//! * [`currents`] : surfaces as currents, the currents mismatch term and its
//!   gradient with respect to vertex positions.
//! * [`lddmm`] : kernel-driven flows of diffeomorphisms, the matching
//!   objective, its adjoint gradient and the gradient-descent matcher.
//! * [`pipeline`] : composite transfer procedures (`synth_all`,
//!   `synth_ear_only`) and run manifests.
//! * [`hrtf`] : HRTF grid sets, SFRS extraction, spatial correlation and a
//!   rigid-sphere scattering model.
//! * [`shapes`] : deterministic synthetic meshes (icospheres, ellipsoids,
//!   bump-ear subjects) used by tests and the CLI.

pub mod currents;
pub mod geom;
pub mod hrtf;
pub mod lddmm;
pub mod mesh;
pub mod pipeline;
pub mod shapes;

pub use currents::{CurrentRep, CurrentsKernel, CurrentsParams};
pub use geom::{Aabb, Vec3};
pub use lddmm::{MatchParams, MatchReport, MomentumField};
pub use mesh::{MeshFormat, SurfaceMesh, ValidationReport};
