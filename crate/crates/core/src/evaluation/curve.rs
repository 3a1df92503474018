use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::par::{self, Execution};

/// The default fractions 0.1, 0.2, ..., 1.0.
pub fn default_fractions() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub n_samples: usize,
    pub n_groups: usize,
    pub f1: f64,
}

/// Nested, group-atomic subsets of the samples, one per fraction.
///
/// Groups are shuffled once with `seed`; each subset is the shortest prefix of
/// that order holding at least `ceil(fraction * n)` samples. Indices keep the
/// original sample order.
pub fn curve_subsets<G: AsRef<str>>(
    groups: &[G],
    fractions: &[f64],
    seed: u64,
) -> Result<Vec<Vec<usize>>, EvalError> {
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        members.entry(g.as_ref()).or_default().push(i);
    }
    let mut order: Vec<&str> = members.keys().copied().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = groups.len();
    fractions
        .iter()
        .map(|&f| {
            if !(f > 0.0 && f <= 1.0) {
                return Err(EvalError::InvalidFraction(f));
            }
            let target = ((f * n as f64) - 1e-9).ceil().max(1.0) as usize;
            let mut picked = Vec::new();
            for g in &order {
                if picked.len() >= target {
                    break;
                }
                picked.extend_from_slice(&members[g]);
            }
            picked.sort_unstable();
            Ok(picked)
        })
        .collect()
}

/// Trains and scores one model per fraction on nested training subsets.
///
/// `evaluate` receives the selected training indices and returns the test F1.
/// A subset without any positive sample is rejected.
pub fn learning_curve<G, F, E>(
    groups: &[G],
    positives: &[bool],
    fractions: &[f64],
    seed: u64,
    exec: Execution,
    evaluate: F,
) -> Result<Vec<CurvePoint>, EvalError>
where
    G: AsRef<str> + Sync,
    F: Fn(&[usize]) -> Result<f64, E> + Sync + Send,
    E: Display,
{
    if groups.len() != positives.len() {
        return Err(EvalError::LengthMismatch {
            left: groups.len(),
            right: positives.len(),
        });
    }
    let subsets = curve_subsets(groups, fractions, seed)?;
    for (s, &f) in subsets.iter().zip(fractions) {
        if !s.iter().any(|&i| positives[i]) {
            return Err(EvalError::FractionTooSmall { fraction: f });
        }
    }
    let scores = par::map(exec, &subsets, |s| evaluate(s).map_err(|e| EvalError::Trainer(e.to_string())));
    subsets
        .iter()
        .zip(fractions)
        .zip(scores)
        .map(|((s, &fraction), f1)| {
            let seen: BTreeSet<&str> = s.iter().map(|&i| groups[i].as_ref()).collect();
            Ok(CurvePoint {
                fraction,
                n_samples: s.len(),
                n_groups: seen.len(),
                f1: f1?,
            })
        })
        .collect()
}
