//! Readers for annotation exports, transcripts and dataset manifests, plus a
//! deterministic synthetic corpus generator.

mod annotations;
mod manifest;
pub mod synth;
mod transcript;

use thiserror::Error;

pub use annotations::{
    parse_annotations, read_annotation_csv, read_boris_aggregated, serialize_observations,
    write_annotation_csv, Marker, RawAnnotationRow,
};
pub use manifest::{load_corpus, Corpus, Manifest};
pub use synth::{generate_synthetic, PlantedRule, SynthConfig, SynthCorpus};
pub use transcript::{
    count_sentences, parse_transcript, split_sentences, write_transcript, TranscriptParse,
    TranscriptWarning,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: unknown feature code `{code}`")]
    UnknownFeature { row: usize, code: String },
    #[error("row {row}: invalid time {value}")]
    InvalidTime { row: usize, value: f64 },
    #[error("row {row}: STOP without a preceding START")]
    UnmatchedStop { row: usize },
    #[error("row {row}: START never closed")]
    UnclosedStart { row: usize },
    #[error("row {row}: STOP at {stop} does not follow START at {start}")]
    NegativeDuration { row: usize, start: f64, stop: f64 },
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("manifest: {0}")]
    Manifest(String),
}

impl IngestError {
    /// Row (or line) position the error refers to, if any.
    pub fn position(&self) -> Option<usize> {
        match self {
            IngestError::UnknownFeature { row, .. }
            | IngestError::InvalidTime { row, .. }
            | IngestError::UnmatchedStop { row }
            | IngestError::UnclosedStart { row }
            | IngestError::NegativeDuration { row, .. } => Some(*row),
            IngestError::MalformedRecord { line, .. } => Some(*line),
            _ => None,
        }
    }
}
