use serde::Serialize;
use thiserror::Error;
use toruslab::estimates::EstimateError;
use toruslab::growth::GrowthError;
use toruslab::nls::NlsError;
use toruslab::quadform::QuadFormError;
use toruslab::spectral::SpectralError;
use toruslab::xsb::XsbError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Assertion(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Assertion(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Assertion(_) => "assertion",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport { error: self.kind(), code: self.exit_code(), message: self.to_string() }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub code: i32,
    pub message: String,
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("json: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Numeric(format!("csv: {e}"))
    }
}

impl From<QuadFormError> for CliError {
    fn from(e: QuadFormError) -> Self {
        match e {
            QuadFormError::NotPositiveDefinite { .. } | QuadFormError::NonFinite | QuadFormError::InvalidRange(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<NlsError> for CliError {
    fn from(e: NlsError) -> Self {
        match e {
            NlsError::InvalidParams(_) | NlsError::StepBudget { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::InvalidConfig(_) | EstimateError::Support { .. } | EstimateError::Empty => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<XsbError> for CliError {
    fn from(e: XsbError) -> Self {
        match e {
            XsbError::InvalidParams(_) | XsbError::Sampling(_) | XsbError::Mismatch(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<GrowthError> for CliError {
    fn from(e: GrowthError) -> Self {
        match e {
            GrowthError::InvalidParams(_) => CliError::Config(e.to_string()),
            GrowthError::Nls(n) => n.into(),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}
