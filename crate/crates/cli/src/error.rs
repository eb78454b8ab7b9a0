use std::path::PathBuf;

use thiserror::Error;
use wavefront_core::birth::BirthError;
use wavefront_core::charroots::RootError;
use wavefront_core::dde::DdeError;
use wavefront_core::pdesim::PdeError;
use wavefront_core::region::RegionError;
use wavefront_core::waveprofile::WaveError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<BirthError> for CliError {
    fn from(e: BirthError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<RootError> for CliError {
    fn from(e: RootError) -> Self {
        match e {
            RootError::BracketFailure { .. } | RootError::ContourThroughRoot { .. } => {
                CliError::NonConvergence(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DdeError> for CliError {
    fn from(e: DdeError) -> Self {
        match e {
            DdeError::Birth(b) => b.into(),
            DdeError::Root(r) => r.into(),
            DdeError::MisalignedStep { .. }
            | DdeError::InvalidStep { .. }
            | DdeError::NegativeHistory(_)
            | DdeError::ZeroHistory
            | DdeError::NotAttracting
            | DdeError::SectorViolated { .. } => CliError::Validation(e.to_string()),
            _ => CliError::NonConvergence(e.to_string()),
        }
    }
}

impl From<WaveError> for CliError {
    fn from(e: WaveError) -> Self {
        match e {
            WaveError::Birth(b) => b.into(),
            WaveError::Root(r) => r.into(),
            WaveError::Dde(d) => d.into(),
            WaveError::NoConvergence { .. } | WaveError::NoCrossing { .. } => CliError::NonConvergence(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<PdeError> for CliError {
    fn from(e: PdeError) -> Self {
        match e {
            PdeError::Birth(b) => b.into(),
            PdeError::Root(r) => r.into(),
            PdeError::Wave(w) => w.into(),
            PdeError::FrontExitedDomain { .. } | PdeError::BlowUp { .. } | PdeError::SpeedUndetermined { .. } => CliError::NonConvergence(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
