//! Toolkit for detecting didactic features in recorded lectures.
//!
//! The pipeline turns observer annotation exports and ASR transcripts into
//! labeled datasets, splits them without group leakage, trains text and
//! multi-view visual detectors, and evaluates them.
//!
//! Module map:
//! - [`domain`]: shared types and interval algebra
//! - [`ingestion`]: annotation CSV / BORIS export, transcript JSON-lines,
//!   manifests, and deterministic synthetic corpora
//! - [`labeling`]: transcript labeling by interval intersection and frame
//!   sampling for the visual experiment
//! - [`splitting`]: group-atomic train/dev/test splits and dataset statistics
//! - [`nncore`]: dense MLP engine with losses, SGD trainer and checkpoints
//! - [`textmodels`]: TF-IDF, hashed n-gram embedding and contextual-bandit
//!   text detectors
//! - [`mtlvision`]: siamese two-view encoder with max-pool fusion
//! - [`evaluation`]: metrics, learning curves, correlations and reports

pub mod domain;
pub mod evaluation;
pub mod ingestion;
pub mod labeling;
pub mod mtlvision;
pub mod nncore;
pub mod par;
pub mod splitting;
pub mod textmodels;

pub use domain::{
    AnnotationEvent, EventKind, Experiment, FeatureId, LectureId, LectureMeta, Observation,
    ObserverId, SeriesId, TimeInterval, TranscriptEvent,
};
pub use par::Execution;
