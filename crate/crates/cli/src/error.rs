use labeltopic::corpus::CorpusError;
use labeltopic::lda::LdaError;
use labeltopic::timeseries::TimeseriesError;
use labeltopic::weighting::WeightingError;
use thiserror::Error;

/// Failure of a command, classified by who has to act on it.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config values or paths.
    #[error("{0}")]
    Usage(String),
    /// Input files that are malformed or inconsistent with each other.
    #[error("{0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

fn io_error(e: std::io::Error) -> CliError {
    match e.kind() {
        std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
            CliError::Usage(e.to_string())
        }
        _ => CliError::Internal(e.to_string()),
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        io_error(e)
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::FileNotFound(_) | CorpusError::InvalidCutoff(_) => {
                CliError::Usage(e.to_string())
            }
            CorpusError::Io(e) => io_error(e),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<WeightingError> for CliError {
    fn from(e: WeightingError) -> Self {
        match e {
            WeightingError::Io(e) => io_error(e),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<LdaError> for CliError {
    fn from(e: LdaError) -> Self {
        match e {
            LdaError::InvalidConfig(_) | LdaError::InvalidTargetWeight(_) => {
                CliError::Usage(e.to_string())
            }
            LdaError::NonIntegerWeights { .. } => CliError::Usage(format!(
                "{e}. The Gibbs sampler only runs on binary weighting; pass --weighting binary"
            )),
            LdaError::Io(e) => io_error(e),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TimeseriesError> for CliError {
    fn from(e: TimeseriesError) -> Self {
        match e {
            TimeseriesError::InvalidBinWidth(_)
            | TimeseriesError::IncompatibleBinWidth(_)
            | TimeseriesError::MisalignedBins(_)
            | TimeseriesError::IndexOutOfRange { .. } => CliError::Usage(e.to_string()),
            TimeseriesError::Io(e) => io_error(e),
            _ => CliError::Data(e.to_string()),
        }
    }
}
