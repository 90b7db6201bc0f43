use super::{print_effective, write_text, Context};
use crate::cli::{ModeArg, SynthArgs};
use crate::config::merge_params;
use crate::error::CliError;
use morpho_core::pipeline::{
    default_data_term, synth_all, synth_ear_only, EarOnlyOptions, PipelineResult, RunManifest, SubjectAssets,
};
use morpho_core::{Aabb, SurfaceMesh};
use std::path::{Path, PathBuf};

fn required<'a>(path: &'a Option<PathBuf>, flag: &str, what: &str, mode: &str) -> Result<&'a Path, CliError> {
    path.as_deref()
        .ok_or_else(|| CliError::Usage(format!("--mode {mode} needs {flag} ({what})")))
}

/// Loads a mesh and names it after the subject rather than the file.
fn load_named(ctx: &Context, path: &Path, name: String) -> Result<SurfaceMesh, CliError> {
    Ok(ctx.load_mesh(path)?.with_name(name))
}

pub fn run(ctx: &Context, args: &SynthArgs) -> Result<(), CliError> {
    let mode = match args.mode {
        ModeArg::All => "all",
        ModeArg::EarOnly => "ear-only",
    };
    let src_full = required(&args.src_full, "--src-full", "full source mesh", mode)?;
    let src_ht = required(&args.src_ht, "--src-ht", "source head/torso mesh", mode)?;
    let src_ear = required(&args.src_ear, "--src-ear", "source left-ear mesh", mode)?;
    let tgt_ear = required(&args.tgt_ear, "--tgt-ear", "target left-ear mesh", mode)?;
    let tgt_ht = match args.mode {
        ModeArg::All => Some(required(&args.tgt_ht, "--tgt-ht", "target head/torso mesh", mode)?),
        ModeArg::EarOnly => None,
    };
    let (s, t) = (&args.src_label, &args.tgt_label);
    if s == t {
        return Err(CliError::Usage(format!("source and target labels are both '{s}'")));
    }

    let src = SubjectAssets::new(
        s.clone(),
        load_named(ctx, src_full, s.clone())?,
        load_named(ctx, src_ht, format!("HT{s}"))?,
        load_named(ctx, src_ear, format!("LE{s}"))?,
    )?;
    let tgt_le = load_named(ctx, tgt_ear, format!("LE{t}"))?;
    let tgt_full = args
        .tgt_full
        .as_deref()
        .map(|p| load_named(ctx, p, t.clone()))
        .transpose()?;

    let region = match &args.ear_region {
        Some(v) => {
            if v.len() != 6 {
                return Err(CliError::Usage(format!(
                    "--ear-region takes 6 values (xmin,ymin,zmin,xmax,ymax,zmax), got {}",
                    v.len()
                )));
            }
            let to_m = |x: f64| x / ctx.units_per_meter;
            let b = Aabb::new([to_m(v[0]), to_m(v[1]), to_m(v[2])], [to_m(v[3]), to_m(v[4]), to_m(v[5])]);
            if (0..3).any(|i| b.min[i] > b.max[i]) {
                return Err(CliError::Usage("--ear-region needs min <= max on every axis".into()));
            }
            Some(b)
        }
        None => None,
    };
    if args.far_field && args.mode == ModeArg::All {
        return Err(CliError::Usage("--far-field applies to --mode ear-only".into()));
    }

    let params = merge_params(&ctx.config, &args.params);
    let parameters = serde_json::json!({
        "mode": mode,
        "source": s,
        "target": t,
        "units": ctx.unit_name(),
        "ear_region": region,
        "far_field": args.far_field,
        "match": params,
    });
    print_effective("synth", &parameters);

    let result = match args.mode {
        ModeArg::All => {
            let tgt_ht_mesh = load_named(ctx, tgt_ht.expect("checked for mode all"), format!("HT{t}"))?;
            // the target full mesh only scores the result; stand in with the
            // head/torso mesh when it was not given
            let full = tgt_full.clone().unwrap_or_else(|| tgt_ht_mesh.concat(&tgt_le).with_name(t.clone()));
            let tgt = SubjectAssets::new(t.clone(), full, tgt_ht_mesh, tgt_le.clone())?;
            synth_all(&src, &tgt, &params)?
        }
        ModeArg::EarOnly => {
            let options = EarOnlyOptions {
                ear_region: region,
                report_far_field: args.far_field,
            };
            synth_ear_only(&src, &tgt_le, &params, &options)?
        }
    };

    ctx.save_mesh(&result.result, &args.out)?;
    let mut manifest = RunManifest::new(format!("synth --mode {mode}"), parameters);
    manifest.stages = result.stages.clone();
    manifest.results = Some(results_summary(&result, &src, tgt_full.as_ref())?);
    let inputs = [
        ("src-full", Some(src_full)),
        ("src-ht", Some(src_ht)),
        ("src-ear", Some(src_ear)),
        ("tgt-full", args.tgt_full.as_deref()),
        ("tgt-ht", tgt_ht),
        ("tgt-ear", Some(tgt_ear)),
    ];
    for (role, path) in inputs {
        if let Some(p) = path {
            manifest.add_file(role, p).map_err(|e| CliError::io(p, e))?;
        }
    }
    manifest.add_file("result", &args.out).map_err(|e| CliError::io(&args.out, e))?;

    if let Some(dir) = &args.keep_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, field) in &result.fields {
            let path = dir.join(format!("{name}.json"));
            field.save(&path)?;
            manifest.add_file(format!("field:{name}"), &path).map_err(|e| CliError::io(&path, e))?;
        }
        for (name, report) in &result.reports {
            let path = dir.join(format!("{name}.report.json"));
            write_text(&path, &super::to_json(report))?;
            manifest.add_file(format!("report:{name}"), &path).map_err(|e| CliError::io(&path, e))?;
        }
        for (name, mesh) in &result.intermediates {
            let path = dir.join(format!("{name}.off"));
            ctx.save_mesh(mesh, &path)?;
            manifest.add_file(format!("mesh:{name}"), &path).map_err(|e| CliError::io(&path, e))?;
        }
    }

    let manifest_path = args.manifest.clone().unwrap_or_else(|| {
        let mut s = args.out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    });
    write_text(&manifest_path, &manifest.to_json())?;
    eprintln!("{}: {}", result.label, args.out.display());
    if let Some(ff) = &result.far_field {
        eprintln!(
            "far field: max displacement {:.3e} m beyond {:.3e} m from the controls (bound {:.3e} m)",
            ff.max_far_displacement, ff.tail_distance, ff.tail_bound
        );
    }
    Ok(())
}

fn results_summary(
    result: &PipelineResult,
    src: &SubjectAssets,
    tgt_full: Option<&SurfaceMesh>,
) -> Result<serde_json::Value, CliError> {
    let mut v = serde_json::json!({ "label": result.label });
    if let Some(full) = tgt_full {
        v["e_source_vs_target_full"] = default_data_term(&src.full, full)?.into();
        v["e_result_vs_target_full"] = default_data_term(&result.result, full)?.into();
    }
    if let Some(ff) = &result.far_field {
        v["far_field"] = serde_json::to_value(ff).expect("report serialises");
        v["far_field_within_tail_bound"] = ff.respects_tail_bound().into();
    }
    Ok(v)
}
