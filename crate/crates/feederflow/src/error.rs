use std::path::PathBuf;

use feederflow_core::Error as CoreError;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Machine-readable failure, printed as JSON on stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse_error",
            CliError::Io { .. } => "io_error",
            CliError::Csv(_) => "io_error",
            CliError::Usage(_) => "usage_error",
            CliError::Core(e) => match e {
                CoreError::InvalidNetwork(_) => "invalid_network",
                CoreError::InvalidArgument(_) => "invalid_argument",
                CoreError::GridMismatch => "grid_mismatch",
                CoreError::UnknownSegment(_) => "unknown_segment",
                CoreError::InjectionOutOfRange { .. } => "injection_out_of_range",
                CoreError::UnderResolvedKernel { .. } => "under_resolved_kernel",
                CoreError::NonConvergence { .. } => "non_convergence",
                CoreError::VoltageCollapse { .. } => "voltage_collapse",
                CoreError::BracketFailure { .. } => "bracket_failure",
                CoreError::MissingLowerOrder { .. } => "missing_lower_order",
                CoreError::UnavailableOrder { .. } => "unavailable_order",
                CoreError::ShareMismatch { .. } => "share_mismatch",
                CoreError::SingularSystem => "singular_system",
            },
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (line, column) = match self {
            CliError::Parse { source, .. } if source.line() > 0 => (Some(source.line()), Some(source.column())),
            _ => (None, None),
        };
        let violations = match self {
            CliError::Core(CoreError::InvalidNetwork(v)) => v.iter().map(ToString::to_string).collect(),
            _ => Vec::new(),
        };
        ErrorReport { code: self.code(), message: self.to_string(), line, column, violations }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
