use super::{emit, print_effective, write_text, Context};
use crate::cli::{CorrArgs, OracleArgs, SfrsArgs};
use crate::error::CliError;
use morpho_core::hrtf::{
    correlation_curve, load_hrtf_set, sfrs as sfrs_map, sphere_hrtf_oracle, write_curve_csv, write_hrtf_set,
    write_sfrs_csv, Direction, Weighting, DEFAULT_LATTICE_SAMPLES,
};
use morpho_core::Vec3;

pub fn sfrs(args: &SfrsArgs) -> Result<(), CliError> {
    let set = load_hrtf_set(&args.set)?;
    print_effective(
        "sfrs",
        &serde_json::json!({ "set": args.set.display().to_string(), "f_hz": args.f }),
    );
    let map = sfrs_map(&set, args.f)?;
    emit(args.out.as_deref(), &write_sfrs_csv(&map))
}

pub fn corr(ctx: &Context, args: &CorrArgs) -> Result<(), CliError> {
    let a = load_hrtf_set(&args.a)?;
    let b = load_hrtf_set(&args.b)?;
    let freqs = if args.freqs.is_empty() {
        a.frequencies().to_vec()
    } else {
        args.freqs.clone()
    };
    let samples = args.lattice.or(ctx.config.lattice).unwrap_or(DEFAULT_LATTICE_SAMPLES);
    if samples == 0 {
        return Err(CliError::Usage("--lattice must be positive".into()));
    }
    let weighting = if args.unweighted {
        Weighting::Uniform
    } else {
        Weighting::SolidAngle { samples }
    };
    print_effective(
        "corr",
        &serde_json::json!({
            "a": args.a.display().to_string(),
            "b": args.b.display().to_string(),
            "freqs_hz": freqs,
            "weighting": match weighting {
                Weighting::Uniform => serde_json::json!("uniform"),
                Weighting::SolidAngle { samples } => serde_json::json!({ "solid_angle_lattice": samples }),
            },
        }),
    );
    let curve = correlation_curve(&a, &b, &freqs, weighting)?;
    for p in curve.iter().filter(|p| p.correlation.is_none()) {
        eprintln!("warning: correlation undefined at {} Hz (a map has no spatial variation)", p.frequency);
    }
    emit(args.out.as_deref(), &write_curve_csv(&curve))
}

pub fn oracle(args: &OracleArgs) -> Result<(), CliError> {
    let valid_step = |s: f64| s.is_finite() && s > 0.0 && s <= 180.0;
    if !valid_step(args.az_step) || !valid_step(args.el_step) {
        return Err(CliError::Usage("grid steps must be in (0, 180] degrees".into()));
    }
    if args.ear.len() != 3 {
        return Err(CliError::Usage(format!("--ear takes 3 values (x,y,z), got {}", args.ear.len())));
    }
    let ear = Vec3::new(args.ear[0], args.ear[1], args.ear[2]);
    let directions = Direction::grid(args.az_step, args.el_step);
    print_effective(
        "oracle",
        &serde_json::json!({
            "radius_m": args.radius,
            "ear": args.ear,
            "az_step_deg": args.az_step,
            "el_step_deg": args.el_step,
            "direction_count": directions.len(),
            "freqs_hz": args.freqs,
            "speed_of_sound_m_s": morpho_core::hrtf::SPEED_OF_SOUND,
        }),
    );
    let set = sphere_hrtf_oracle(args.radius, &ear, &directions, &args.freqs).map_err(|e| match e {
        // bad radius, ear or frequency values are argument errors here
        morpho_core::hrtf::HrtfError::Invalid(m) => CliError::Usage(m),
        other => other.into(),
    })?;
    write_text(&args.out, &write_hrtf_set(&set))
}
