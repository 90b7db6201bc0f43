use super::{print_effective, Context};
use crate::cli::{GenCommand, PresetArg};
use crate::error::CliError;
use morpho_core::shapes::{icosphere, BumpSubjectSpec};
use morpho_core::Vec3;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const MAX_SUBDIVISIONS: u32 = 7;

fn check_subdivisions(s: u32) -> Result<(), CliError> {
    if s > MAX_SUBDIVISIONS {
        return Err(CliError::Usage(format!(
            "at most {MAX_SUBDIVISIONS} subdivisions ({} vertices)",
            10 * 4u64.pow(MAX_SUBDIVISIONS) + 2
        )));
    }
    Ok(())
}

fn positive(x: f64, what: &str) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} must be positive, got {x}")))
    }
}

/// Generated shapes are specified in meters and written in file units.
pub fn run(ctx: &Context, cmd: &GenCommand) -> Result<(), CliError> {
    match cmd {
        GenCommand::Icosphere {
            subdivisions,
            radius,
            jitter,
            seed,
            out,
        } => {
            check_subdivisions(*subdivisions)?;
            positive(*radius, "radius")?;
            if !(0.0..0.5).contains(jitter) {
                return Err(CliError::Usage(format!("jitter must be in [0, 0.5), got {jitter}")));
            }
            print_effective(
                "gen icosphere",
                &serde_json::json!({ "subdivisions": subdivisions, "radius_m": radius, "jitter": jitter, "seed": seed }),
            );
            let mut mesh = icosphere(*subdivisions, *radius);
            if *jitter > 0.0 {
                let mut rng = StdRng::seed_from_u64(*seed);
                let moved: Vec<Vec3> = mesh
                    .vertices()
                    .iter()
                    .map(|v| v * (1.0 + jitter * rng.random_range(-1.0..1.0)))
                    .collect();
                mesh = mesh.with_vertices(moved);
            }
            ctx.save_mesh(&mesh, out)
        }
        GenCommand::Ellipsoid {
            subdivisions,
            semi_axes,
            out,
        } => {
            check_subdivisions(*subdivisions)?;
            if semi_axes.len() != 3 {
                return Err(CliError::Usage(format!("--semi-axes takes 3 values, got {}", semi_axes.len())));
            }
            for a in semi_axes {
                positive(*a, "semi-axis")?;
            }
            print_effective(
                "gen ellipsoid",
                &serde_json::json!({ "subdivisions": subdivisions, "semi_axes_m": semi_axes }),
            );
            let axes = Vec3::new(semi_axes[0], semi_axes[1], semi_axes[2]);
            let unit = icosphere(*subdivisions, 1.0);
            let mesh = unit.with_vertices(unit.vertices().iter().map(|v| v.component_mul(&axes)).collect());
            ctx.save_mesh(&mesh, out)
        }
        GenCommand::Subject { preset, out_dir } => {
            let spec = match preset {
                PresetArg::Source => BumpSubjectSpec::reference_source(),
                PresetArg::Target => BumpSubjectSpec::reference_target(),
            };
            let region = spec.left_ear_region();
            print_effective(
                "gen subject",
                &serde_json::json!({
                    "label": spec.label,
                    "body_radius_m": spec.body_radius,
                    "body_subdivisions": spec.body_subdivisions,
                    "ear_semi_axes_m": spec.ear_semi_axes,
                    "ear_subdivisions": spec.ear_subdivisions,
                    "left_ear_twist_deg": spec.left_ear_twist_deg,
                    "left_ear_region_m": region,
                }),
            );
            std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
            let assets = spec.build();
            for mesh in [&assets.full, &assets.head_torso_no_ears, &assets.left_ear] {
                let name = mesh.name().expect("subject meshes are named");
                ctx.save_mesh(mesh, &out_dir.join(format!("{name}.off")))?;
            }
            let u = ctx.units_per_meter;
            println!(
                "{},{},{},{},{},{}",
                region.min[0] * u,
                region.min[1] * u,
                region.min[2] * u,
                region.max[0] * u,
                region.max[1] * u,
                region.max[2] * u
            );
            Ok(())
        }
    }
}
