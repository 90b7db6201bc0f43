use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "morpho",
    version,
    about = "Diffeomorphic surface matching, shape transfer and HRTF spatial analysis",
    propagate_version = true
)]
pub struct Cli {
    /// TOML file with default parameters; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Mesh files are in millimeters (converted to meters on load and back
    /// on save). Kernel widths and tolerances are always in meters.
    #[arg(long, global = true)]
    pub mm: bool,

    /// Print per-iteration progress.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Match SOURCE onto TARGET and write the momentum field and a report.
    Match(MatchArgs),
    /// Transport a mesh through one or more momentum fields.
    Flow(FlowArgs),
    /// Run a shape-transfer procedure between two subjects.
    Synth(SynthArgs),
    /// Spatial frequency response surface of an HRTF set at one frequency.
    Sfrs(SfrsArgs),
    /// SFRS spatial correlation between two HRTF sets versus frequency.
    Corr(CorrArgs),
    /// Rigid-sphere HRTF set from the analytic scattering series.
    Oracle(OracleArgs),
    /// Generate synthetic meshes.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelArg {
    Gaussian,
    Cauchy,
}

/// Matching parameters. Unset values come from the config file, then from
/// the library defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    /// Width of the deformation kernel in meters [default: 25% of the source
    /// bounding-box diagonal].
    #[arg(long, value_name = "M")]
    pub sigma_v: Option<f64>,
    /// Width of the currents kernel in meters [default: 10% of the target
    /// bounding-box diagonal].
    #[arg(long, value_name = "M")]
    pub sigma_w: Option<f64>,
    /// Currents kernel [default: gaussian].
    #[arg(long, value_enum)]
    pub currents_kernel: Option<KernelArg>,
    /// Regularisation weight [default: 0.01].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Time steps of the flow [default: 10].
    #[arg(long, value_name = "T")]
    pub steps: Option<usize>,
    /// [default: 200]
    #[arg(long, value_name = "N")]
    pub max_iterations: Option<usize>,
    /// Relative gradient-norm tolerance [default: 1e-6].
    #[arg(long)]
    pub grad_tol: Option<f64>,
    /// Relative objective-decrease tolerance [default: 1e-6].
    #[arg(long)]
    pub rel_j_tol: Option<f64>,
    /// Armijo sufficient-decrease constant [default: 1e-4].
    #[arg(long)]
    pub armijo_c: Option<f64>,
    /// Step halvings before the line search gives up [default: 30].
    #[arg(long, value_name = "N")]
    pub max_halvings: Option<usize>,
    /// Use at most N source vertices as control points.
    #[arg(long, value_name = "N")]
    pub max_controls: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MatchArgs {
    pub source: PathBuf,
    pub target: PathBuf,
    /// Output momentum field (JSON).
    #[arg(long, value_name = "FILE")]
    pub field: PathBuf,
    /// Output match report (JSON).
    #[arg(long, value_name = "FILE")]
    pub report: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    pub mesh: PathBuf,
    /// Momentum fields, applied in order.
    #[arg(required = true)]
    pub fields: Vec<PathBuf>,
    /// Mesh after the complete flow (OFF or PLY by extension).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Snapshot times in [0, 1], snapped to the step grid. Needs a single
    /// field and --snapshot-prefix.
    #[arg(long = "t", value_name = "T", value_delimiter = ',', requires = "snapshot_prefix")]
    pub times: Vec<f64>,
    /// Snapshots are written to PREFIX_t<time>.ply with a per-vertex
    /// `displacement` column.
    #[arg(long, value_name = "PREFIX")]
    pub snapshot_prefix: Option<PathBuf>,
    /// Print the data term of the flowed mesh against this target.
    #[arg(long, value_name = "FILE")]
    pub score_against: Option<PathBuf>,
    /// Currents width for --score-against [default: 10% of the target
    /// bounding-box diagonal].
    #[arg(long, value_name = "M")]
    pub sigma_w: Option<f64>,
    #[arg(long, value_enum)]
    pub currents_kernel: Option<KernelArg>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeArg {
    All,
    EarOnly,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Full source mesh (torso, head and ears).
    #[arg(long, value_name = "FILE")]
    pub src_full: Option<PathBuf>,
    /// Source head and torso without ears.
    #[arg(long, value_name = "FILE")]
    pub src_ht: Option<PathBuf>,
    /// Source left ear.
    #[arg(long, value_name = "FILE")]
    pub src_ear: Option<PathBuf>,
    /// Full target mesh; only used to score the result.
    #[arg(long, value_name = "FILE")]
    pub tgt_full: Option<PathBuf>,
    /// Target head and torso without ears (mode all).
    #[arg(long, value_name = "FILE")]
    pub tgt_ht: Option<PathBuf>,
    /// Target left ear.
    #[arg(long, value_name = "FILE")]
    pub tgt_ear: Option<PathBuf>,
    #[arg(long, default_value = "S1")]
    pub src_label: String,
    #[arg(long, default_value = "S2")]
    pub tgt_label: String,
    /// Result mesh.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Run manifest [default: <out>.manifest.json].
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Also write fields, reports and intermediate meshes here.
    #[arg(long, value_name = "DIR")]
    pub keep_dir: Option<PathBuf>,
    /// Box around the source left ear: xmin,ymin,zmin,xmax,ymax,zmax (in the
    /// mesh file units).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ear_region: Option<Vec<f64>>,
    /// Report torso displacement outside the ear region (mode ear-only).
    #[arg(long)]
    pub far_field: bool,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Args, Debug)]
pub struct SfrsArgs {
    pub set: PathBuf,
    /// Frequency in Hz.
    #[arg(long)]
    pub f: f64,
    /// CSV output [default: stdout].
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CorrArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Frequencies in Hz [default: the grid frequencies of A].
    #[arg(long, value_delimiter = ',')]
    pub freqs: Vec<f64>,
    /// Plain Pearson correlation instead of solid-angle weighting.
    #[arg(long)]
    pub unweighted: bool,
    /// Lattice points used to measure solid angles [default: 40000].
    #[arg(long, value_name = "N")]
    pub lattice: Option<usize>,
    /// CSV output [default: stdout].
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Sphere radius in meters.
    #[arg(long)]
    pub radius: f64,
    /// Ear direction as x,y,z.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1,0")]
    pub ear: Vec<f64>,
    /// Azimuth step of the direction grid in degrees.
    #[arg(long, default_value_t = 10.0)]
    pub az_step: f64,
    /// Elevation step of the direction grid in degrees.
    #[arg(long, default_value_t = 10.0)]
    pub el_step: f64,
    /// Frequencies in Hz.
    #[arg(long, value_delimiter = ',', required = true)]
    pub freqs: Vec<f64>,
    /// HRTF grid output.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum GenCommand {
    /// Subdivided icosahedron, optionally with seeded radial jitter.
    Icosphere {
        #[arg(long, default_value_t = 2)]
        subdivisions: u32,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Relative radial jitter amplitude.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Axis-aligned ellipsoid centred at the origin.
    Ellipsoid {
        #[arg(long, default_value_t = 2)]
        subdivisions: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        semi_axes: Vec<f64>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Sphere body with ellipsoidal ears: writes <label>.off, HT<label>.off
    /// and LE<label>.off.
    Subject {
        #[arg(long, value_enum)]
        preset: PresetArg,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetArg {
    Source,
    Target,
}
