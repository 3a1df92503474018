use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Grads, LossSpec, NetError};
use crate::par::{self, Execution};

/// Samples per gradient work unit. Fixed so the reduction order does not
/// depend on the number of worker threads.
const GRAD_CHUNK: usize = 8;

/// A model whose parameters the SGD trainer can update.
pub trait Trainable: Clone + Send + Sync {
    type Sample: Sync;

    fn parameters(&self) -> Vec<&[f64]>;
    fn parameters_mut(&mut self) -> Vec<&mut [f64]>;

    /// Adds the gradient of `sample`'s loss into `grads` and returns the loss.
    fn accumulate(
        &self,
        sample: &Self::Sample,
        loss: &LossSpec,
        grads: &mut Grads,
    ) -> Result<f64, NetError>;

    fn zero_grads(&self) -> Grads {
        Grads::zeros_like(&self.parameters())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without dev improvement before stopping; 0 disables early stopping.
    pub early_stop_patience: usize,
    pub seed: u64,
    pub repeats: usize,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 32,
            max_epochs: 50,
            early_stop_patience: 8,
            seed: 0,
            repeats: 1,
            execution: Execution::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |m: &str| Err(NetError::Config(m.to_owned()));
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)");
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return bad("batch_size and max_epochs must be positive");
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

fn batch_gradient<M: Trainable>(
    model: &M,
    samples: &[&M::Sample],
    loss: &LossSpec,
    exec: Execution,
) -> Result<(Grads, f64), NetError> {
    let parts = par::map_chunks(exec, samples, GRAD_CHUNK, |chunk| {
        let mut g = model.zero_grads();
        let mut l = 0.0;
        for s in chunk {
            l += model.accumulate(s, loss, &mut g)?;
        }
        Ok::<_, NetError>((g, l))
    });
    let mut total: Option<Grads> = None;
    let mut loss_sum = 0.0;
    for part in parts {
        let (g, l) = part?;
        loss_sum += l;
        match &mut total {
            Some(t) => t.add_assign(&g),
            None => total = Some(g),
        }
    }
    Ok((total.expect("non-empty batch"), loss_sum))
}

/// Mini-batch SGD with momentum.
///
/// Each epoch shuffles the training set with a seeded generator, then
/// `dev_score` (higher is better) is evaluated on the updated model. The model
/// with the best dev score is returned. The run is fully determined by
/// `config.seed` and the initial model.
pub fn train<M, F>(
    model: M,
    train_set: &[M::Sample],
    dev_set: &[M::Sample],
    loss: &LossSpec,
    config: &TrainConfig,
    dev_score: F,
) -> Result<(M, History), NetError>
where
    M: Trainable,
    F: Fn(&M, &[M::Sample]) -> f64,
{
    config.validate()?;
    if train_set.is_empty() {
        return Err(NetError::EmptyData("training"));
    }
    if dev_set.is_empty() {
        return Err(NetError::EmptyData("dev"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5eed);
    let mut model = model;
    let mut velocity = model.zero_grads();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut best = model.clone();
    let mut best_score = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut epochs = Vec::new();
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let samples: Vec<&M::Sample> = batch.iter().map(|&i| &train_set[i]).collect();
            let (mut g, l) = batch_gradient(&model, &samples, loss, config.execution)?;
            if !l.is_finite() {
                return Err(NetError::Divergence { epoch, loss: l });
            }
            epoch_loss += l;
            g.scale(1.0 / batch.len() as f64);
            for (v, gb) in velocity.blocks.iter_mut().zip(&g.blocks) {
                for (vi, gi) in v.iter_mut().zip(gb) {
                    *vi = config.momentum * *vi + gi;
                }
            }
            for (p, v) in model.parameters_mut().into_iter().zip(&velocity.blocks) {
                for (pi, vi) in p.iter_mut().zip(v) {
                    *pi -= config.learning_rate * vi;
                }
            }
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        if model.parameters().iter().any(|b| b.iter().any(|x| !x.is_finite())) {
            return Err(NetError::Divergence {
                epoch,
                loss: train_loss,
            });
        }
        let score = dev_score(&model, dev_set);
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            dev_score: score,
        });
        if score > best_score {
            best_score = score;
            best_epoch = epoch;
            best = model.clone();
        } else if config.early_stop_patience > 0 && epoch - best_epoch >= config.early_stop_patience {
            stopped_early = true;
            break;
        }
    }
    if best_epoch == 0 {
        // dev score never finite-improving (e.g. NaN): keep the last model
        best = model;
        best_epoch = epochs.len();
    }
    Ok((
        best,
        History {
            epochs,
            best_epoch,
            stopped_early,
        },
    ))
}
