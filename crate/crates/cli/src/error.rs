use thiserror::Error;

use didactic_core::evaluation::EvalError;
use didactic_core::ingestion::IngestError;
use didactic_core::labeling::LabelError;
use didactic_core::mtlvision::{LembError, MtlError};
use didactic_core::splitting::SplitError;
use didactic_core::textmodels::TextError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    MissingInput(String),
    #[error("{0}")]
    Tampered(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Mtl(#[from] MtlError),
    #[error(transparent)]
    Lemb(#[from] LembError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Synth(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Stable category name printed as `error[<category>]`.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::MissingInput(_) => "MissingInput",
            CliError::Tampered(_) => "Tampered",
            CliError::Ingest(_) => "Ingest",
            CliError::Label(_) => "Label",
            CliError::Split(_) => "Split",
            CliError::Text(_) => "Train",
            CliError::Mtl(_) => "Train",
            CliError::Lemb(_) => "Embedding",
            CliError::Eval(_) => "Eval",
            CliError::Synth(_) => "Synth",
            CliError::Io(_) => "Io",
            CliError::Json(_) => "Format",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::MissingInput(_) => 2,
            _ => 1,
        }
    }

    /// The single diagnostic line for stderr.
    pub fn line(&self) -> String {
        let detail = self.to_string().replace('\n', " ");
        format!("error[{}]: {detail}", self.category())
    }
}
