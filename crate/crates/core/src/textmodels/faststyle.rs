use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tokenize::hashed_ngrams;
use super::TextError;
use crate::nncore::{output_delta, Activation, DenseNet, Input, LossSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastStyleConfig {
    pub buckets: usize,
    pub dim: usize,
    pub epochs: usize,
    /// Initial step size, decayed linearly to zero over training.
    pub learning_rate: f64,
    /// Majority group size relative to the minority after downsampling;
    /// `None` trains on everything.
    pub downsample_ratio: Option<f64>,
}

impl Default for FastStyleConfig {
    fn default() -> Self {
        Self {
            buckets: 1 << 18,
            dim: 16,
            epochs: 10,
            learning_rate: 0.5,
            downsample_ratio: Some(1.0),
        }
    }
}

/// Mean of hashed n-gram embeddings followed by a sigmoid output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FastStyleModel {
    pub buckets: usize,
    pub dim: usize,
    /// Row-major `buckets x dim`.
    pub embeddings: Vec<f64>,
    pub output: DenseNet,
    pub downsample_ratio: Option<f64>,
}

impl FastStyleModel {
    pub fn init(buckets: usize, dim: usize, classes: usize, seed: u64) -> Result<Self, TextError> {
        if buckets == 0 || dim == 0 {
            return Err(TextError::Config("buckets and dim must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = 1.0 / dim as f64;
        let embeddings = (0..buckets * dim).map(|_| rng.random_range(-a..a)).collect();
        let output = DenseNet::new(&[dim, classes], &[Activation::Sigmoid], seed.wrapping_add(1))?;
        Ok(Self {
            buckets,
            dim,
            embeddings,
            output,
            downsample_ratio: None,
        })
    }

    fn row(&self, b: usize) -> &[f64] {
        &self.embeddings[b * self.dim..(b + 1) * self.dim]
    }

    /// Mean n-gram embedding; all zeros for a text without tokens.
    pub fn doc_vector(&self, text: &str) -> Vec<f64> {
        self.mean_of(&hashed_ngrams(text, self.buckets))
    }

    fn mean_of(&self, ids: &[usize]) -> Vec<f64> {
        let mut h = vec![0.0; self.dim];
        for &b in ids {
            for (hi, e) in h.iter_mut().zip(self.row(b)) {
                *hi += e;
            }
        }
        if !ids.is_empty() {
            let n = ids.len() as f64;
            h.iter_mut().for_each(|x| *x /= n);
        }
        h
    }

    pub fn scores(&self, text: &str) -> Result<Vec<f64>, TextError> {
        Ok(self.output.forward(&self.doc_vector(text))?)
    }

    /// One SGD step on a single document; returns its loss.
    pub(crate) fn step(&mut self, ids: &[usize], target: &[f64], lr: f64) -> Result<f64, TextError> {
        let h = self.mean_of(ids);
        let trace = self.output.forward_trace(Input::Dense(&h))?;
        let (l, delta) = output_delta(
            &LossSpec::bce(),
            Activation::Sigmoid,
            trace.output_pre(),
            trace.output(),
            target,
        )?;
        let mut g = self.output.zero_grads();
        let dh = self
            .output
            .backward(Input::Dense(&h), &trace, &delta, &mut g, true)
            .expect("input gradient requested");
        for (p, gb) in self.output.param_blocks_mut().into_iter().zip(&g.blocks) {
            for (pi, gi) in p.iter_mut().zip(gb) {
                *pi -= lr * gi;
            }
        }
        if !ids.is_empty() {
            let k = lr / ids.len() as f64;
            for &b in ids {
                let row = &mut self.embeddings[b * self.dim..(b + 1) * self.dim];
                for (e, d) in row.iter_mut().zip(&dh) {
                    *e -= k * d;
                }
            }
        }
        Ok(l)
    }
}

/// Shrinks the larger of the positive and negative index groups to
/// `round(minority * ratio)` samples, chosen with `rng`. Returned indices are
/// sorted.
pub fn downsample(positive: &[bool], ratio: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = (0..positive.len()).partition(|&i| positive[i]);
    let (major, minor) = if pos.len() >= neg.len() {
        (&mut pos, neg.len())
    } else {
        (&mut neg, pos.len())
    };
    let keep = ((minor as f64 * ratio).round() as usize).max(1).min(major.len());
    major.shuffle(rng);
    major.truncate(keep);
    let mut out: Vec<usize> = pos.into_iter().chain(neg).collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doc_vector_is_mean_and_order_free() {
        let m = FastStyleModel::init(1024, 4, 1, 5).unwrap();
        let a = m.doc_vector("alpha beta gamma");
        let ids = hashed_ngrams("alpha beta gamma", 1024);
        let mut manual = vec![0.0; 4];
        for &b in &ids {
            for d in 0..4 {
                manual[d] += m.embeddings[b * 4 + d] / ids.len() as f64;
            }
        }
        for (x, y) in a.iter().zip(&manual) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(m.doc_vector(""), vec![0.0; 4]);
    }

    #[test]
    fn mean_pool_permutation_invariant() {
        let m = FastStyleModel::init(4096, 8, 1, 2).unwrap();
        let ids = hashed_ngrams("one two three four", 4096);
        let mut rev = ids.clone();
        rev.reverse();
        let (a, b) = (m.mean_of(&ids), m.mean_of(&rev));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn downsample_balances_exactly() {
        let pos: Vec<bool> = (0..100).map(|i| i % 5 == 0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let idx = downsample(&pos, 1.0, &mut rng);
        let p = idx.iter().filter(|&&i| pos[i]).count();
        assert_eq!(p, 20);
        assert_eq!(idx.len() - p, 20);
        let idx = downsample(&pos, 2.0, &mut rng);
        assert_eq!(idx.len(), 60);
    }

    #[test]
    fn steps_reduce_loss() {
        let mut m = FastStyleModel::init(512, 4, 1, 3).unwrap();
        let ids = hashed_ngrams("is it ?", 512);
        let first = m.step(&ids, &[1.0], 0.5).unwrap();
        let mut last = first;
        for _ in 0..20 {
            last = m.step(&ids, &[1.0], 0.5).unwrap();
        }
        assert!(last < first);
    }
}
