//! A small dense neural-network engine: fully connected layers, three
//! activations, (binary) cross-entropy losses with class weights, a seeded
//! mini-batch SGD trainer with momentum and early stopping, finite-difference
//! gradient checks and a binary checkpoint container.

mod checkpoint;
mod gradcheck;
mod loss;
mod net;
mod train;

use thiserror::Error;

pub use checkpoint::{Checkpoint, CheckpointError, LayerArch, NetArchitecture, SectionData};
pub use gradcheck::gradient_check;
pub use loss::{loss, output_delta, LossKind, LossSpec, LossVariant};
pub use net::{Activation, DenseNet, Example, Features, Grads, Input, Layer, Trace, LEAKY_SLOPE};
pub use train::{train, EpochRecord, History, TrainConfig, Trainable};

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("invalid loss spec: {0}")]
    InvalidLoss(String),
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("empty {0} set")]
    EmptyData(&'static str),
}
