use serde::{Deserialize, Serialize};

use super::{FrameRecord, VISUAL_CLASSES};
use crate::nncore::{output_delta, Activation, DenseNet, Grads, Input, LossSpec, NetError, Trainable};

/// Layer widths of the two-view model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MtlArchitecture {
    /// Output widths of the shared encoder's LeakyReLU layers.
    pub encoder_dims: Vec<usize>,
    /// Hidden width of the classifier; 0 gives a single sigmoid layer.
    pub classifier_hidden: usize,
}

impl Default for MtlArchitecture {
    fn default() -> Self {
        Self {
            encoder_dims: vec![256, 256, 256],
            classifier_hidden: 128,
        }
    }
}

/// Shared (siamese) encoder applied to both views, elementwise max-pool,
/// and a sigmoid classifier over the nine visual classes.
#[derive(Debug, Clone, PartialEq)]
pub struct MtlModel {
    pub encoder: DenseNet,
    pub classifier: DenseNet,
}

impl MtlModel {
    pub fn new(input_dim: usize, arch: &MtlArchitecture, seed: u64) -> Result<Self, NetError> {
        if arch.encoder_dims.is_empty() {
            return Err(NetError::Architecture("encoder needs at least one layer".into()));
        }
        let mut dims = vec![input_dim];
        dims.extend(&arch.encoder_dims);
        let acts = vec![Activation::LeakyRelu; arch.encoder_dims.len()];
        let encoder = DenseNet::new(&dims, &acts, seed)?;
        let pooled = *arch.encoder_dims.last().expect("non-empty");
        let classifier = if arch.classifier_hidden > 0 {
            DenseNet::mlp(
                pooled,
                &[arch.classifier_hidden],
                VISUAL_CLASSES,
                Activation::LeakyRelu,
                Activation::Sigmoid,
                seed.wrapping_add(1),
            )?
        } else {
            DenseNet::new(&[pooled, VISUAL_CLASSES], &[Activation::Sigmoid], seed.wrapping_add(1))?
        };
        Self::from_parts(encoder, classifier)
    }

    pub fn from_parts(encoder: DenseNet, classifier: DenseNet) -> Result<Self, NetError> {
        if encoder.output_dim() != classifier.input_dim() {
            return Err(NetError::DimensionMismatch {
                expected: encoder.output_dim(),
                found: classifier.input_dim(),
            });
        }
        Ok(Self { encoder, classifier })
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    /// Elementwise maximum of the two encodings.
    pub fn pool(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x.max(*y)).collect()
    }

    /// Class scores for a pair of view embeddings. Symmetric in its arguments.
    pub fn forward_views(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>, NetError> {
        let ea = self.encoder.forward(a)?;
        let eb = self.encoder.forward(b)?;
        self.classifier.forward(&Self::pool(&ea, &eb))
    }

    pub fn forward(&self, record: &FrameRecord) -> Result<Vec<f64>, NetError> {
        self.forward_views(&record.camera, &record.screen)
    }
}

/// Convenience wrapper matching the record-level scoring operation.
pub fn mtl_forward(model: &MtlModel, record: &FrameRecord) -> Result<Vec<f64>, NetError> {
    model.forward(record)
}

impl Trainable for MtlModel {
    type Sample = FrameRecord;

    fn parameters(&self) -> Vec<&[f64]> {
        let mut p = self.encoder.param_blocks();
        p.extend(self.classifier.param_blocks());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut p = self.encoder.param_blocks_mut();
        p.extend(self.classifier.param_blocks_mut());
        p
    }

    fn accumulate(&self, sample: &FrameRecord, loss: &LossSpec, grads: &mut Grads) -> Result<f64, NetError> {
        let ta = self.encoder.forward_trace(Input::Dense(&sample.camera))?;
        let tb = self.encoder.forward_trace(Input::Dense(&sample.screen))?;
        let (ea, eb) = (ta.output(), tb.output());
        let pooled = Self::pool(ea, eb);
        let tc = self.classifier.forward_trace(Input::Dense(&pooled))?;
        let target = sample.target();
        let (l, delta) = output_delta(
            loss,
            self.classifier.output_activation(),
            tc.output_pre(),
            tc.output(),
            &target,
        )?;

        let n_enc = 2 * self.encoder.layers.len();
        let mut enc = Grads {
            blocks: grads.blocks.drain(..n_enc).collect(),
        };
        let mut cls = Grads {
            blocks: std::mem::take(&mut grads.blocks),
        };
        let dpool = self
            .classifier
            .backward(Input::Dense(&pooled), &tc, &delta, &mut cls, true)
            .expect("input gradient requested");
        // Ties route to the camera view.
        let mut da = vec![0.0; dpool.len()];
        let mut db = vec![0.0; dpool.len()];
        for i in 0..dpool.len() {
            if ea[i] >= eb[i] {
                da[i] = dpool[i];
            } else {
                db[i] = dpool[i];
            }
        }
        let enc_last = self.encoder.layers.last().expect("non-empty");
        let to_pre = |d: &[f64], t: &crate::nncore::Trace| -> Vec<f64> {
            d.iter()
                .zip(t.output_pre().iter().zip(t.output()))
                .map(|(g, (&z, &a))| g * enc_last.activation.derivative(z, a))
                .collect()
        };
        self.encoder
            .backward(Input::Dense(&sample.camera), &ta, &to_pre(&da, &ta), &mut enc, false);
        self.encoder
            .backward(Input::Dense(&sample.screen), &tb, &to_pre(&db, &tb), &mut enc, false);

        grads.blocks = enc.blocks;
        grads.blocks.append(&mut cls.blocks);
        Ok(l)
    }
}
