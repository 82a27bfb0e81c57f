use std::fmt;
use std::process::ExitCode;

use netmeasure_core::analysis::AnalysisError;
use netmeasure_core::dsl::{BindError, ParseError};
use netmeasure_core::dynamics::DynamicsError;
use netmeasure_core::info::InfoError;
use netmeasure_core::lyapunov::LyapunovError;
use netmeasure_core::mc::McError;
use netmeasure_core::robustness::RobustnessError;

/// Process exit status. The numeric values are a stable contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Input could not be read or parsed (files, flags, ensembles).
    Parse = 1,
    /// No stable equilibrium to linearize at.
    Unstable = 2,
    /// An enumeration or size cap was hit.
    Cap = 3,
    /// Inputs are individually valid but inconsistent with each other.
    Mismatch = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn new(status: Status, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(Status::Parse, message)
    }

    pub fn mismatch(message: impl Into<String>) -> Self {
        Self::new(Status::Mismatch, message)
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.status as u8)
    }

    pub fn context(self, what: &str) -> Self {
        Self {
            status: self.status,
            message: format!("{what}: {}", self.message),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        Self::parse(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::parse(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::parse(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::DimensionMismatch { .. } => Self::mismatch(e.to_string()),
            DynamicsError::BadTolerance(_) => Self::parse(e.to_string()),
            _ => Self::new(Status::Unstable, e.to_string()),
        }
    }
}

impl From<LyapunovError> for CliError {
    fn from(e: LyapunovError) -> Self {
        let status = match &e {
            LyapunovError::Unstable(_)
            | LyapunovError::Singular
            | LyapunovError::NotPositiveDefinite(_) => Status::Unstable,
            LyapunovError::TooLarge(_) => Status::Cap,
            LyapunovError::Dimension { .. } | LyapunovError::SingularNoise => Status::Mismatch,
            LyapunovError::Dynamics(d) => return Self::from(d.clone()),
        };
        Self::new(status, e.to_string())
    }
}

impl From<InfoError> for CliError {
    fn from(e: InfoError) -> Self {
        let status = match &e {
            InfoError::EnumerationCap { .. } => Status::Cap,
            InfoError::BadEps(_) => Status::Parse,
            InfoError::Lyapunov(l) => return Self::from(l.clone()),
            _ => Status::Mismatch,
        };
        Self::new(status, e.to_string())
    }
}

impl From<BindError> for CliError {
    fn from(e: BindError) -> Self {
        match e {
            BindError::UnknownParam(_) => Self::mismatch(e.to_string()),
            BindError::InvalidValue { .. } => Self::parse(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Equilibrium(d) => Self::from(d),
            AnalysisError::Unstable(_) => Self::new(Status::Unstable, e.to_string()),
            AnalysisError::Lyapunov(l) => Self::from(l),
            AnalysisError::Info(i) => Self::from(i),
            AnalysisError::Bind(b) => Self::from(b),
            AnalysisError::NoiseDimension { .. } => Self::mismatch(e.to_string()),
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        let status = match &e {
            McError::Config(_) | McError::Format(_) | McError::Io(_) => Status::Parse,
            McError::AllChainsDiverged(_) => Status::Unstable,
            _ => Status::Mismatch,
        };
        Self::new(status, e.to_string())
    }
}

impl From<RobustnessError> for CliError {
    fn from(e: RobustnessError) -> Self {
        match e {
            RobustnessError::Lyapunov(l) => Self::from(l),
            RobustnessError::NotPositiveDefinite | RobustnessError::DegenerateGrid => {
                Self::new(Status::Unstable, e.to_string())
            }
            RobustnessError::BadRadius(_) => Self::parse(e.to_string()),
            _ => Self::mismatch(e.to_string()),
        }
    }
}
