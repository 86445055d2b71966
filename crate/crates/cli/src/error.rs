use std::path::Path;

use perpsim::agents::AgentError;
use perpsim::decompose::ArimaError;
use perpsim::econometrics::EconError;
use perpsim::marketdata::remote::FetchError;
use perpsim::marketdata::DataError;
use perpsim::pipeline::PipelineError;
use perpsim::vamm::VammError;
use perpsim::volatility::VolatilityError;
use thiserror::Error;

/// Process exit status. The numeric values are a stable contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Usage = 1,
    Data = 2,
    Numerical = 3,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Usage(_) => Exit::Usage,
            CliError::Data(_) => Exit::Data,
            CliError::Numerical(_) => Exit::Numerical,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }

    pub fn in_file(path: &Path, err: DataError) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<AgentError> for CliError {
    fn from(e: AgentError) -> Self {
        match e {
            AgentError::Config(_) => CliError::Usage(e.to_string()),
            AgentError::Engine(_) => CliError::Numerical(e.to_string()),
            AgentError::Io { .. } => CliError::Data(e.to_string()),
        }
    }
}

impl From<ArimaError> for CliError {
    fn from(e: ArimaError) -> Self {
        match e {
            ArimaError::TooShort { .. }
            | ArimaError::NonFinite
            | ArimaError::LengthMismatch(..)
            | ArimaError::MissingField(_) => CliError::Data(e.to_string()),
            ArimaError::InvalidOrder(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<EconError> for CliError {
    fn from(e: EconError) -> Self {
        match e {
            EconError::RankDeficient { .. } | EconError::NoFeasibleLag(_) => CliError::Numerical(e.to_string()),
            EconError::Invalid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<VolatilityError> for CliError {
    fn from(e: VolatilityError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Volatility(e) => e.into(),
            PipelineError::Arima(e) => e.into(),
            PipelineError::Econ(e) => e.into(),
        }
    }
}

impl From<FetchError> for CliError {
    fn from(e: FetchError) -> Self {
        match e {
            FetchError::Config(_) | FetchError::MissingCredentials(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<VammError> for CliError {
    fn from(e: VammError) -> Self {
        CliError::Data(e.to_string())
    }
}
