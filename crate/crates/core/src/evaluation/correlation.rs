use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::domain::{FeatureId, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
    pub n: usize,
}

const MIN_POINTS: usize = 3;

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    check(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties share their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    check(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

fn check(x: &[f64], y: &[f64]) -> Result<(), EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < MIN_POINTS {
        return Err(EvalError::TooFewPoints {
            needed: MIN_POINTS,
            found: x.len(),
        });
    }
    Ok(())
}

/// Correlation between per-feature cumulative duration and score.
pub fn duration_score_correlation(pairs: &[(f64, f64)]) -> Result<Correlation, EvalError> {
    let (d, s): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
    Ok(Correlation {
        pearson: pearson(&d, &s)?,
        spearman: spearman(&d, &s)?,
        n: pairs.len(),
    })
}

/// Sum of event durations per feature over all observations.
pub fn cumulative_durations(observations: &[Observation]) -> BTreeMap<FeatureId, f64> {
    let mut out = BTreeMap::new();
    for e in observations.iter().flat_map(|o| &o.events) {
        *out.entry(e.feature).or_insert(0.0) += e.span.duration();
    }
    out
}

/// Highest score per feature across several models' per-feature results.
pub fn top_scores<'a>(
    runs: impl IntoIterator<Item = &'a BTreeMap<FeatureId, f64>>,
) -> BTreeMap<FeatureId, f64> {
    let mut out: BTreeMap<FeatureId, f64> = BTreeMap::new();
    for run in runs {
        for (&f, &s) in run {
            let e = out.entry(f).or_insert(s);
            *e = e.max(s);
        }
    }
    out
}
