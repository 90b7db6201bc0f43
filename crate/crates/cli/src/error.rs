use morpho_core::currents::CurrentsError;
use morpho_core::hrtf::HrtfError;
use morpho_core::lddmm::LddmmError;
use morpho_core::mesh::MeshError;
use morpho_core::pipeline::PipelineError;
use thiserror::Error;

/// Failure of a command, classified by exit code: 2 usage, 3 IO or parse,
/// 4 numerical.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Input(format!("failed to read or write {}: {e}", path.display()))
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CurrentsError> for CliError {
    fn from(e: CurrentsError) -> Self {
        match e {
            CurrentsError::BadWidth(_) => CliError::Usage(e.to_string()),
            CurrentsError::DegenerateFace { .. } => CliError::Input(e.to_string()),
            CurrentsError::NegativeDataTerm { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<LddmmError> for CliError {
    fn from(e: LddmmError) -> Self {
        match e {
            LddmmError::InvalidParams(_) => CliError::Usage(e.to_string()),
            LddmmError::InvalidInput(_)
            | LddmmError::InvalidField(_)
            | LddmmError::Format(_)
            | LddmmError::Io { .. } => CliError::Input(e.to_string()),
            LddmmError::Currents(c) => c.into(),
            LddmmError::NonFinite(_) | LddmmError::LineSearchFailed { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<HrtfError> for CliError {
    fn from(e: HrtfError) -> Self {
        match e {
            HrtfError::Io { .. } | HrtfError::Parse { .. } | HrtfError::Invalid(_) => CliError::Input(e.to_string()),
            HrtfError::FrequencyOutOfRange { .. } | HrtfError::DirectionMismatch(_) => CliError::Usage(e.to_string()),
            HrtfError::NonFinite(_) | HrtfError::SeriesNotConverged { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let msg = e.to_string();
        match e {
            PipelineError::Stage { source, .. } => match CliError::from(source) {
                CliError::Usage(_) => CliError::Usage(msg),
                CliError::Input(_) => CliError::Input(msg),
                CliError::Numerical(_) => CliError::Numerical(msg),
            },
            PipelineError::Mesh { .. } | PipelineError::InvalidAssets(_) => CliError::Input(msg),
            PipelineError::MissingEarRegion => CliError::Usage(msg),
        }
    }
}
