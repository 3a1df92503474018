use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tokenize::hashed_features;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditConfig {
    pub buckets: usize,
    pub epsilon: f64,
    pub passes: usize,
    pub learning_rate: f64,
}

impl Default for BanditConfig {
    fn default() -> Self {
        Self {
            buckets: 1 << 18,
            epsilon: 0.05,
            passes: 5,
            learning_rate: 0.5,
        }
    }
}

/// Chooses the action distribution given the greedy arm.
pub trait ExplorationPolicy {
    fn probabilities(&self, greedy: usize, arms: usize) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonGreedy {
    pub epsilon: f64,
}

impl ExplorationPolicy for EpsilonGreedy {
    fn probabilities(&self, greedy: usize, arms: usize) -> Vec<f64> {
        let explore = self.epsilon / arms as f64;
        (0..arms)
            .map(|a| if a == greedy { 1.0 - self.epsilon + explore } else { explore })
            .collect()
    }
}

/// Draws an arm from `probs` with a single uniform sample.
pub fn sample_arm<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (a, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Cost-sensitive one-against-all: one linear cost regressor per arm over
/// hashed n-gram features.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditModel {
    pub buckets: usize,
    pub arms: Vec<String>,
    /// Per arm, `buckets + 1` weights (the last one is the bias feature).
    pub weights: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl BanditModel {
    pub fn new(arms: Vec<String>, config: &BanditConfig) -> Self {
        Self {
            buckets: config.buckets,
            weights: vec![vec![0.0; config.buckets + 1]; arms.len()],
            arms,
            epsilon: config.epsilon,
            learning_rate: config.learning_rate,
        }
    }

    pub fn features(&self, text: &str) -> Vec<(usize, f64)> {
        hashed_features(text, self.buckets)
    }

    pub fn predicted_costs(&self, x: &[(usize, f64)]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| x.iter().map(|&(i, v)| w[i] * v).sum())
            .collect()
    }

    /// Arm with the lowest predicted cost, ties to the lowest index.
    pub fn greedy(&self, x: &[(usize, f64)]) -> usize {
        let c = self.predicted_costs(x);
        let mut best = 0;
        for a in 1..c.len() {
            if c[a] < c[best] {
                best = a;
            }
        }
        best
    }

    /// Importance-aware squared-loss update of one arm's regressor toward the
    /// observed `cost`, with importance weight `1 / probability`. Assumes a
    /// unit-norm `x`.
    pub fn learn(&mut self, x: &[(usize, f64)], arm: usize, cost: f64, probability: f64) {
        let h = 1.0 / probability;
        let w = &mut self.weights[arm];
        let pred: f64 = x.iter().map(|&(i, v)| w[i] * v).sum();
        let step = (cost - pred) * (1.0 - (-self.learning_rate * h).exp());
        for &(i, v) in x {
            w[i] += step * v;
        }
    }
}
