use super::{print_effective, Context};
use crate::cli::FlowArgs;
use crate::error::CliError;
use morpho_core::currents::{data_term_e, current_of, CurrentsParams};
use morpho_core::lddmm::{apply_flow, flow_snapshots};
use morpho_core::{MomentumField, SurfaceMesh};
use std::path::{Path, PathBuf};

/// Fields transport arbitrary points, so a field learned on another mesh is
/// only worth a warning.
fn check_provenance(mesh: &SurfaceMesh, field: &MomentumField, path: &Path) {
    let name = mesh.name().unwrap_or("");
    let src = field.provenance.source.as_str();
    if !src.is_empty() && !name.is_empty() && src != name {
        eprintln!(
            "warning: {} was learned on '{src}' but is applied to '{name}'",
            path.display()
        );
    }
}

fn snapshot_path(prefix: &Path, time: f64) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!("_t{time:.3}.ply"));
    PathBuf::from(s)
}

pub fn run(ctx: &Context, args: &FlowArgs) -> Result<(), CliError> {
    if args.out.is_none() && args.times.is_empty() && args.score_against.is_none() {
        return Err(CliError::Usage(
            "nothing to do: give --out, --t with --snapshot-prefix, or --score-against".into(),
        ));
    }
    if !args.times.is_empty() && args.fields.len() != 1 {
        return Err(CliError::Usage(format!(
            "snapshots need exactly one field, got {}",
            args.fields.len()
        )));
    }
    let mesh = ctx.load_mesh(&args.mesh)?;
    let fields = args
        .fields
        .iter()
        .map(|p| {
            let f = MomentumField::load(p)?;
            check_provenance(&mesh, &f, p);
            Ok(f)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    print_effective(
        "flow",
        &serde_json::json!({
            "mesh": args.mesh.display().to_string(),
            "fields": args.fields.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "n_steps": fields.iter().map(MomentumField::n_steps).collect::<Vec<_>>(),
            "sigma_v": fields.iter().map(MomentumField::sigma_v).collect::<Vec<_>>(),
            "times": args.times,
            "units": ctx.unit_name(),
        }),
    );

    let moved = apply_flow(&mesh, &fields)?;
    if let Some(out) = &args.out {
        ctx.save_mesh(&moved, out)?;
    }

    if let Some(prefix) = &args.snapshot_prefix {
        for snap in flow_snapshots(&mesh, &fields[0], &args.times)? {
            let path = snapshot_path(prefix, snap.time);
            ctx.save_ply_with_lengths(&snap.mesh, "displacement", &snap.displacement, &path)?;
            eprintln!("t = {:.3} (step {}): {}", snap.time, snap.step, path.display());
        }
    }

    if let Some(target_path) = &args.score_against {
        let target = ctx.load_mesh(target_path)?;
        let mut params = CurrentsParams::default_for(&target);
        if let Some(s) = args.sigma_w {
            params.sigma_w = s;
        }
        if let Some(k) = args.currents_kernel {
            params.kernel = k.into();
        }
        let e = data_term_e(&moved, &current_of(&target)?, &params)?;
        println!(
            "{}",
            serde_json::json!({ "e": e, "sigma_w": params.sigma_w, "currents_kernel": params.kernel })
        );
    }
    Ok(())
}
