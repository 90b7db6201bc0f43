use super::{print_effective, to_json, write_text, Context};
use crate::cli::MatchArgs;
use crate::config::merge_params;
use crate::error::CliError;
use morpho_core::lddmm::{match_surfaces, Termination};

pub fn run(ctx: &Context, args: &MatchArgs) -> Result<(), CliError> {
    let source = ctx.load_mesh(&args.source)?;
    let target = ctx.load_mesh(&args.target)?;
    let params = merge_params(&ctx.config, &args.params);
    let effective = params.resolve(&source, &target)?;
    print_effective(
        "match",
        &serde_json::json!({
            "source": args.source.display().to_string(),
            "target": args.target.display().to_string(),
            "units": ctx.unit_name(),
            "match": effective,
        }),
    );

    let (field, report) = match_surfaces(&source, &target, &params)?;
    if ctx.verbose {
        for (i, j) in report.trace.iter().enumerate() {
            eprintln!("iteration {i:4}  J = {j:.9e}");
        }
    }
    field.save(&args.field)?;
    write_text(&args.report, &to_json(&report))?;

    eprintln!(
        "{} iterations, E {:.6e} -> {:.6e} ({:.4}% reduction), stopped on {}",
        report.iterations,
        report.initial.e,
        report.final_.e,
        100.0 * report.data_term_reduction(),
        match report.termination {
            Termination::GradientTolerance => "gradient tolerance",
            Termination::RelativeJTolerance => "relative objective tolerance",
            Termination::MaxIterations => "iteration limit",
        }
    );
    if !report.converged {
        eprintln!("warning: iteration limit reached before the stopping tolerances were met");
    }
    Ok(())
}
