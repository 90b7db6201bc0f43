//! Composite shape-transfer procedures.
//!
//! * [`synth_all`] carries a subject's head, torso and left ear over to a
//!   target subject: match the ear-less head/torso meshes, transport the
//!   source left ear through that flow, match the transported ear to the
//!   target ear, then apply both flows in sequence to the full source mesh.
//! * [`synth_ear_only`] replaces only the left ear: translate the target ear
//!   onto the source ear, match the source ear to it, and apply that single
//!   flow to the full source mesh. The Cauchy kernel's decay leaves distant
//!   geometry nearly in place; [`FarFieldReport`] quantifies that.

mod manifest;

pub use manifest::{sha256_hex, FileRecord, RunManifest, StageRecord};

use crate::currents::{CurrentsParams, TargetCurrent};
use crate::geom::{Aabb, Vec3};
use crate::lddmm::{
    apply_flow, integrate_flow, match_surfaces, transport, LddmmError, MatchParams, MatchReport, MomentumField,
};
use crate::mesh::{translate_align, validate, MeshError, SurfaceMesh};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: LddmmError,
    },
    #[error("stage '{stage}' failed: {source}")]
    Mesh {
        stage: String,
        #[source]
        source: MeshError,
    },
    #[error("invalid subject assets: {0}")]
    InvalidAssets(String),
    #[error("a far-field report was requested but no ear region was given")]
    MissingEarRegion,
}

/// Meshes of one subject.
#[derive(Clone, Debug)]
pub struct SubjectAssets {
    pub label: String,
    /// Torso, head and both ears.
    pub full: SurfaceMesh,
    pub head_torso_no_ears: SurfaceMesh,
    pub left_ear: SurfaceMesh,
}

impl SubjectAssets {
    /// Bundles the meshes and names them `<label>`, `HT<label>` and
    /// `LE<label>` unless they already carry names.
    pub fn new(
        label: impl Into<String>,
        full: SurfaceMesh,
        head_torso_no_ears: SurfaceMesh,
        left_ear: SurfaceMesh,
    ) -> Result<Self, PipelineError> {
        let label = label.into();
        let named = |m: SurfaceMesh, name: String| match m.name() {
            Some(n) if !n.is_empty() => m,
            _ => m.with_name(name),
        };
        let assets = Self {
            full: named(full, label.clone()),
            head_torso_no_ears: named(head_torso_no_ears, format!("HT{label}")),
            left_ear: named(left_ear, format!("LE{label}")),
            label,
        };
        assets.check()?;
        Ok(assets)
    }

    pub fn labels(&self) -> [&str; 3] {
        [
            self.full.name().unwrap_or(""),
            self.head_torso_no_ears.name().unwrap_or(""),
            self.left_ear.name().unwrap_or(""),
        ]
    }

    pub fn check(&self) -> Result<(), PipelineError> {
        if self.label.is_empty() {
            return Err(PipelineError::InvalidAssets("subject label is empty".into()));
        }
        let labels = self.labels();
        if labels.iter().any(|l| l.is_empty()) {
            return Err(PipelineError::InvalidAssets(format!("{}: unnamed mesh", self.label)));
        }
        if labels[0] == labels[1] || labels[1] == labels[2] || labels[0] == labels[2] {
            return Err(PipelineError::InvalidAssets(format!(
                "{}: mesh labels are not distinct: {labels:?}",
                self.label
            )));
        }
        for (what, m) in [
            ("full", &self.full),
            ("head_torso_no_ears", &self.head_torso_no_ears),
            ("left_ear", &self.left_ear),
        ] {
            if let Some(e) = validate(m).errors.first() {
                return Err(PipelineError::InvalidAssets(format!(
                    "{}.{what}: {} ({})",
                    self.label, e.code, e.message
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Procedure {
    All,
    EarOnly,
}

/// Displacement of the full mesh away from the ear.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FarFieldReport {
    pub ear_region: Aabb,
    pub outside_vertex_count: usize,
    pub max_displacement_outside: f64,
    /// `10 · σ_V` of the ear flow.
    pub tail_distance: f64,
    /// Vertices at least `tail_distance` from every control position.
    pub far_vertex_count: usize,
    pub max_far_displacement: f64,
    /// Upper bound on far-vertex displacement from the kernel tail
    /// `k_V ≤ σ_V² / d²`, summed over controls and steps.
    pub tail_bound: f64,
}

impl FarFieldReport {
    pub fn respects_tail_bound(&self) -> bool {
        self.max_far_displacement <= self.tail_bound
    }
}

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub procedure: Procedure,
    pub label: String,
    pub result: SurfaceMesh,
    /// Named intermediate meshes, in stage order.
    pub intermediates: Vec<(String, SurfaceMesh)>,
    /// Learned fields, in the order they are applied to the full mesh.
    pub fields: Vec<(String, MomentumField)>,
    pub reports: Vec<(String, MatchReport)>,
    pub stages: Vec<StageRecord>,
    pub far_field: Option<FarFieldReport>,
}

impl PipelineResult {
    pub fn intermediate(&self, name: &str) -> Option<&SurfaceMesh> {
        self.intermediates.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn field(&self, name: &str) -> Option<&MomentumField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn report(&self, name: &str) -> Option<&MatchReport> {
        self.reports.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }

    /// Re-applies the stored fields to the inputs and returns the largest
    /// deviation from the stored intermediates and result, relative to the
    /// full mesh's bounding-box diagonal.
    pub fn reverify(&self, src: &SubjectAssets) -> Result<f64, LddmmError> {
        let scale = src.full.bbox_diagonal().max(f64::MIN_POSITIVE);
        let fields: Vec<MomentumField> = self.fields.iter().map(|(_, f)| f.clone()).collect();
        let mut worst = apply_flow(&src.full, &fields)?.max_vertex_distance(&self.result);
        if self.procedure == Procedure::All {
            let le3 = apply_flow(&src.left_ear, &fields[..1])?;
            if let Some(stored) = self.intermediate("LE3") {
                worst = worst.max(le3.max_vertex_distance(stored));
            }
        }
        Ok(worst / scale)
    }
}

fn stage_err(stage: &str) -> impl FnOnce(LddmmError) -> PipelineError + '_ {
    move |source| PipelineError::Stage {
        stage: stage.to_string(),
        source,
    }
}

fn match_summary(report: &MatchReport, field: &MomentumField) -> serde_json::Value {
    serde_json::json!({
        "iterations": report.iterations,
        "termination": report.termination,
        "e_initial": report.initial.e,
        "e_final": report.final_.e,
        "j_final": report.final_.j,
        "max_momentum": field.max_momentum(),
        "sigma_v": report.params.sigma_v,
        "sigma_w": report.params.sigma_w,
    })
}

/// Source head/torso, then ear, matched onto the target; both flows applied
/// to the full source mesh.
pub fn synth_all(
    src: &SubjectAssets,
    tgt: &SubjectAssets,
    params: &MatchParams,
) -> Result<PipelineResult, PipelineError> {
    src.check()?;
    tgt.check()?;
    let (ht1, ht2) = (&src.head_torso_no_ears, &tgt.head_torso_no_ears);
    let (le1, le2) = (&src.left_ear, &tgt.left_ear);
    let name = |m: &SurfaceMesh| m.name().unwrap_or("").to_string();

    let (alpha_ht, report_ht) = match_surfaces(ht1, ht2, params).map_err(stage_err("match head/torso"))?;
    let le3 = apply_flow(le1, std::slice::from_ref(&alpha_ht))
        .map_err(stage_err("flow left ear"))?
        .with_name("LE3");
    let (alpha_e, report_e) = match_surfaces(&le3, le2, params).map_err(stage_err("match left ear"))?;
    let result = apply_flow(&src.full, &[alpha_ht.clone(), alpha_e.clone()])
        .map_err(stage_err("flow full mesh"))?;
    let label = format!("{}_to_{}_all", src.label, tgt.label);
    let result = result.with_name(label.clone());

    let stages = vec![
        StageRecord {
            index: 1,
            name: "alpha_HT".into(),
            operation: "match".into(),
            inputs: vec![name(ht1), name(ht2)],
            output: "alpha_HT".into(),
            summary: Some(match_summary(&report_ht, &alpha_ht)),
        },
        StageRecord {
            index: 2,
            name: "LE3".into(),
            operation: "flow".into(),
            inputs: vec![name(le1), "alpha_HT".into()],
            output: "LE3".into(),
            summary: None,
        },
        StageRecord {
            index: 3,
            name: "alpha_E".into(),
            operation: "match".into(),
            inputs: vec!["LE3".into(), name(le2)],
            output: "alpha_E".into(),
            summary: Some(match_summary(&report_e, &alpha_e)),
        },
        StageRecord {
            index: 4,
            name: "result".into(),
            operation: "flow".into(),
            inputs: vec![name(&src.full), "alpha_HT".into(), "alpha_E".into()],
            output: label.clone(),
            summary: None,
        },
    ];

    Ok(PipelineResult {
        procedure: Procedure::All,
        label,
        result,
        intermediates: vec![("LE3".into(), le3)],
        fields: vec![("alpha_HT".into(), alpha_ht), ("alpha_E".into(), alpha_e)],
        reports: vec![("alpha_HT".into(), report_ht), ("alpha_E".into(), report_e)],
        stages,
        far_field: None,
    })
}

/// Options of [`synth_ear_only`].
#[derive(Clone, Debug, Default)]
pub struct EarOnlyOptions {
    /// Box around the source left ear, in source coordinates.
    pub ear_region: Option<Aabb>,
    pub report_far_field: bool,
}

/// Only the left ear of the source is reshaped towards `tgt_left_ear`.
pub fn synth_ear_only(
    src: &SubjectAssets,
    tgt_left_ear: &SurfaceMesh,
    params: &MatchParams,
    options: &EarOnlyOptions,
) -> Result<PipelineResult, PipelineError> {
    src.check()?;
    if options.report_far_field && options.ear_region.is_none() {
        return Err(PipelineError::MissingEarRegion);
    }
    let le1 = &src.left_ear;
    let tgt_name = tgt_left_ear.name().unwrap_or("LE2").to_string();

    let (le2_moved, translation) =
        translate_align(tgt_left_ear, le1).map_err(|source| PipelineError::Mesh {
            stage: "translate target ear".into(),
            source,
        })?;
    let le2_moved = le2_moved.with_name(format!("{tgt_name}_translated"));
    let (alpha_e, report_e) = match_surfaces(le1, &le2_moved, params).map_err(stage_err("match left ear"))?;
    let result = apply_flow(&src.full, std::slice::from_ref(&alpha_e)).map_err(stage_err("flow full mesh"))?;
    let label = format!("{}_to_{}_ear-only", src.label, tgt_name);
    let result = result.with_name(label.clone());

    let far_field = if options.report_far_field {
        let region = options.ear_region.expect("checked above");
        Some(far_field_report(&src.full, &alpha_e, &region).map_err(stage_err("far-field report"))?)
    } else {
        None
    };

    let stages = vec![
        StageRecord {
            index: 1,
            name: le2_moved.name().unwrap_or("").to_string(),
            operation: "translate".into(),
            inputs: vec![tgt_name.clone(), le1.name().unwrap_or("").to_string()],
            output: le2_moved.name().unwrap_or("").to_string(),
            summary: Some(serde_json::json!({ "translation": [translation.x, translation.y, translation.z] })),
        },
        StageRecord {
            index: 2,
            name: "alpha_E".into(),
            operation: "match".into(),
            inputs: vec![le1.name().unwrap_or("").to_string(), le2_moved.name().unwrap_or("").to_string()],
            output: "alpha_E".into(),
            summary: Some(match_summary(&report_e, &alpha_e)),
        },
        StageRecord {
            index: 3,
            name: "result".into(),
            operation: "flow".into(),
            inputs: vec![src.full.name().unwrap_or("").to_string(), "alpha_E".into()],
            output: label.clone(),
            summary: None,
        },
    ];

    Ok(PipelineResult {
        procedure: Procedure::EarOnly,
        label,
        result,
        intermediates: vec![("LE2_translated".into(), le2_moved)],
        fields: vec![("alpha_E".into(), alpha_e)],
        reports: vec![("alpha_E".into(), report_e)],
        stages,
        far_field,
    })
}

/// Measures how far the full mesh moved outside `ear_region`, and checks the
/// kernel-tail bound for vertices far from every control position.
pub fn far_field_report(
    before: &SurfaceMesh,
    field: &MomentumField,
    ear_region: &Aabb,
) -> Result<FarFieldReport, LddmmError> {
    let sigma = field.sigma_v();
    let tail_distance = 10.0 * sigma;
    let h = 1.0 / field.n_steps() as f64;
    // Σ_k Δt Σ_n ‖α_n(t_k)‖
    let momentum_mass: f64 = field
        .momenta()
        .iter()
        .map(|step| step.iter().map(|a| a.norm()).sum::<f64>() * h)
        .sum();
    let traj = field.control_trajectories();
    let max_control_step = traj
        .windows(2)
        .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (b - a).norm()))
        .fold(0.0, f64::max);
    let controls: Vec<&Vec3> = traj.iter().flatten().collect();
    let path = integrate_flow(before.vertices(), field, 1.0)?;
    let after = path.last().expect("path is nonempty");

    let mut outside = 0;
    let mut max_outside: f64 = 0.0;
    let mut far = 0;
    let mut max_far: f64 = 0.0;
    let mut worst_bound: f64 = 0.0;
    for (i, (p, q)) in before.vertices().iter().zip(after).enumerate() {
        let disp = (q - p).norm();
        if !ear_region.contains(p) {
            outside += 1;
            max_outside = max_outside.max(disp);
        }
        let d = controls
            .iter()
            .map(|c| (*c - p).norm())
            .fold(f64::INFINITY, f64::min);
        if d >= tail_distance {
            far += 1;
            max_far = max_far.max(disp);
            // distance to the nearest control at any time is at least the
            // initial distance minus the vertex's arc length and one control step
            let arc: f64 = path.windows(2).map(|w| (w[1][i] - w[0][i]).norm()).sum();
            let d_eff = (d - arc - max_control_step).max(f64::MIN_POSITIVE);
            worst_bound = worst_bound.max(sigma * sigma / (d_eff * d_eff) * momentum_mass);
        }
    }
    // vacuous when no vertex is far away
    let tail_bound = if far == 0 { f64::INFINITY } else { worst_bound };
    Ok(FarFieldReport {
        ear_region: *ear_region,
        outside_vertex_count: outside,
        max_displacement_outside: max_outside,
        tail_distance,
        far_vertex_count: far,
        max_far_displacement: max_far,
        tail_bound,
    })
}

/// Both procedures with source and target swapped, run concurrently.
pub struct MirroredResults {
    pub all: PipelineResult,
    pub ear_only: PipelineResult,
}

/// Runs [`synth_all`] and [`synth_ear_only`] from `tgt` back to `src`.
/// The reverse transformations are independent optimisations and are not
/// inverses of the forward ones. `options.ear_region` applies to the reverse
/// ear-only run, so it must enclose the left ear of `tgt`.
pub fn mirror_direction(
    src: &SubjectAssets,
    tgt: &SubjectAssets,
    params: &MatchParams,
    options: &EarOnlyOptions,
) -> Result<MirroredResults, PipelineError> {
    let (all, ear_only) = rayon::join(
        || synth_all(tgt, src, params),
        || synth_ear_only(tgt, &src.left_ear, params, options),
    );
    Ok(MirroredResults {
        all: all?,
        ear_only: ear_only?,
    })
}

/// Data term of `mesh` against `target` with σ_W = 10% of the target's
/// bounding-box diagonal (the matcher's default).
pub fn default_data_term(mesh: &SurfaceMesh, target: &SurfaceMesh) -> Result<f64, LddmmError> {
    let tc = TargetCurrent::from_mesh(target, CurrentsParams::default_for(target))?;
    Ok(tc.data_term(mesh)?)
}

/// Vertices of `mesh` transported through `fields`, without building a mesh.
pub fn transport_points(points: &[Vec3], fields: &[MomentumField]) -> Vec<Vec3> {
    fields.iter().fold(points.to_vec(), |p, f| transport(&p, f))
}
