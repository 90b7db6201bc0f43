mod acoustics;
mod flow;
mod generate;
mod matching;
mod synth;

use crate::cli::{Cli, Command};
use crate::config::ConfigFile;
use crate::error::CliError;
use morpho_core::mesh::{load_mesh, save_mesh, write_ply, MeshFormat};
use morpho_core::SurfaceMesh;
use serde::Serialize;
use std::path::Path;

/// Settings shared by every command.
pub struct Context {
    pub config: ConfigFile,
    /// File units per meter: 1 for meters, 1000 for millimeters.
    pub units_per_meter: f64,
    pub verbose: bool,
}

impl Context {
    pub fn unit_name(&self) -> &'static str {
        if self.units_per_meter == 1.0 {
            "m"
        } else {
            "mm"
        }
    }

    /// Loads a mesh and converts it to meters.
    pub fn load_mesh(&self, path: &Path) -> Result<SurfaceMesh, CliError> {
        let format = mesh_format(path)?;
        let mesh = load_mesh(path, format)?;
        Ok(if self.units_per_meter == 1.0 {
            mesh
        } else {
            mesh.scaled(1.0 / self.units_per_meter)
        })
    }

    pub fn to_file_units(&self, mesh: &SurfaceMesh) -> SurfaceMesh {
        if self.units_per_meter == 1.0 {
            mesh.clone()
        } else {
            mesh.scaled(self.units_per_meter)
        }
    }

    pub fn save_mesh(&self, mesh: &SurfaceMesh, path: &Path) -> Result<(), CliError> {
        let format = mesh_format(path)?;
        save_mesh(&self.to_file_units(mesh), path, format)?;
        Ok(())
    }

    /// PLY with one extra per-vertex column given in meters.
    pub fn save_ply_with_lengths(
        &self,
        mesh: &SurfaceMesh,
        column: &str,
        values: &[f64],
        path: &Path,
    ) -> Result<(), CliError> {
        let scaled: Vec<f64> = values.iter().map(|v| v * self.units_per_meter).collect();
        let text = write_ply(&self.to_file_units(mesh), &[(column, &scaled)]);
        write_text(path, &text)
    }
}

pub fn mesh_format(path: &Path) -> Result<MeshFormat, CliError> {
    MeshFormat::from_path(path).ok_or_else(|| {
        CliError::Usage(format!(
            "{}: unknown mesh format (expected .off or .ply)",
            path.display()
        ))
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// CSV or other text to a file, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serialises");
    s.push('\n');
    s
}

/// Every run prints the parameters it actually used to stderr.
pub fn print_effective(command: &str, params: &serde_json::Value) {
    eprintln!("effective parameters ({command}):");
    eprintln!("{}", serde_json::to_string_pretty(params).expect("value serialises"));
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mm = cli.mm || config.mm.unwrap_or(false);
    let ctx = Context {
        config,
        units_per_meter: if mm { 1000.0 } else { 1.0 },
        verbose: cli.verbose,
    };
    match cli.command {
        Command::Match(args) => matching::run(&ctx, &args),
        Command::Flow(args) => flow::run(&ctx, &args),
        Command::Synth(args) => synth::run(&ctx, &args),
        Command::Sfrs(args) => acoustics::sfrs(&args),
        Command::Corr(args) => acoustics::corr(&ctx, &args),
        Command::Oracle(args) => acoustics::oracle(&args),
        Command::Gen(cmd) => generate::run(&ctx, &cmd),
    }
}
