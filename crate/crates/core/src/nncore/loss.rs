use serde::{Deserialize, Serialize};

use super::net::Activation;
use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// One-hot targets over mutually exclusive classes.
    CrossEntropy,
    /// Independent binary targets, one per output.
    BinaryCrossEntropy,
}

/// Class weighting choice for binary heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossVariant {
    Plain,
    /// Inverse-frequency weights from the training targets.
    #[default]
    Weighted,
}

impl LossVariant {
    pub fn bce_spec<'a>(self, targets: impl IntoIterator<Item = &'a [f64]>) -> LossSpec {
        match self {
            LossVariant::Plain => LossSpec::bce(),
            LossVariant::Weighted => LossSpec::balanced_bce(targets),
        }
    }
}

/// Loss with optional per-class weights.
///
/// `class_weights[c]` multiplies class `c`'s term; for binary cross-entropy it
/// multiplies the positive (`y = 1`) part and `negative_weights[c]` the
/// negative part. Missing weights are 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    #[serde(default)]
    pub class_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub negative_weights: Option<Vec<f64>>,
}

impl LossSpec {
    pub fn bce() -> Self {
        Self {
            kind: LossKind::BinaryCrossEntropy,
            class_weights: None,
            negative_weights: None,
        }
    }

    pub fn ce() -> Self {
        Self {
            kind: LossKind::CrossEntropy,
            class_weights: None,
            negative_weights: None,
        }
    }

    /// Inverse-frequency weights `N / (2 * N_outcome)` per output for binary
    /// targets, so each head's positives and negatives carry equal total weight.
    pub fn balanced_bce<'a>(targets: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut pos: Vec<f64> = Vec::new();
        let mut n = 0usize;
        for t in targets {
            if pos.is_empty() {
                pos = vec![0.0; t.len()];
            }
            for (p, y) in pos.iter_mut().zip(t) {
                *p += y;
            }
            n += 1;
        }
        let n = n as f64;
        let w_pos = pos.iter().map(|&p| n / (2.0 * p.max(1.0))).collect();
        let w_neg = pos.iter().map(|&p| n / (2.0 * (n - p).max(1.0))).collect();
        Self {
            kind: LossKind::BinaryCrossEntropy,
            class_weights: Some(w_pos),
            negative_weights: Some(w_neg),
        }
    }

    /// Inverse-frequency weights `N / (K * N_c)` for one-hot targets.
    pub fn balanced_ce<'a>(targets: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut counts: Vec<f64> = Vec::new();
        let mut n = 0usize;
        for t in targets {
            if counts.is_empty() {
                counts = vec![0.0; t.len()];
            }
            for (c, y) in counts.iter_mut().zip(t) {
                *c += y;
            }
            n += 1;
        }
        let k = counts.len() as f64;
        let w = counts.iter().map(|&c| n as f64 / (k * c.max(1.0))).collect();
        Self {
            kind: LossKind::CrossEntropy,
            class_weights: Some(w),
            negative_weights: None,
        }
    }

    pub fn validate(&self, classes: usize) -> Result<(), NetError> {
        for (name, w) in [
            ("class", &self.class_weights),
            ("negative", &self.negative_weights),
        ] {
            if let Some(w) = w {
                if w.len() != classes {
                    return Err(NetError::InvalidLoss(format!(
                        "{} {name} weights for {classes} classes",
                        w.len()
                    )));
                }
                if w.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                    return Err(NetError::InvalidLoss(format!("{name} weights must be positive")));
                }
            }
        }
        Ok(())
    }

    fn pos_w(&self, c: usize) -> f64 {
        self.class_weights.as_ref().map_or(1.0, |w| w[c])
    }

    fn neg_w(&self, c: usize) -> f64 {
        self.negative_weights.as_ref().map_or(1.0, |w| w[c])
    }
}

fn xlnx(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * p.ln()
    }
}

/// Mean over classes of the weighted negative log-likelihood of `scores`
/// (probabilities) under `targets`.
pub fn loss(spec: &LossSpec, scores: &[f64], targets: &[f64]) -> Result<f64, NetError> {
    if scores.len() != targets.len() {
        return Err(NetError::DimensionMismatch {
            expected: targets.len(),
            found: scores.len(),
        });
    }
    spec.validate(scores.len())?;
    let k = scores.len() as f64;
    let mut total = 0.0;
    for (c, (&p, &y)) in scores.iter().zip(targets).enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(NetError::InvalidProbability(p));
        }
        let term = match spec.kind {
            LossKind::BinaryCrossEntropy => {
                -(spec.pos_w(c) * xlnx(y, p) + spec.neg_w(c) * xlnx(1.0 - y, 1.0 - p))
            }
            LossKind::CrossEntropy => -spec.pos_w(c) * xlnx(y, p),
        };
        if !term.is_finite() {
            return Err(NetError::InvalidProbability(p));
        }
        total += term;
    }
    Ok(total / k)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Loss value and its gradient with respect to the output layer's
/// pre-activation `z` (with `out = activation(z)`).
///
/// Sigmoid outputs under binary cross-entropy and identity outputs under
/// cross-entropy (softmax over logits) are computed from logits, so saturated
/// outputs stay finite.
pub fn output_delta(
    spec: &LossSpec,
    activation: Activation,
    z: &[f64],
    out: &[f64],
    targets: &[f64],
) -> Result<(f64, Vec<f64>), NetError> {
    if targets.len() != out.len() {
        return Err(NetError::DimensionMismatch {
            expected: out.len(),
            found: targets.len(),
        });
    }
    spec.validate(out.len())?;
    let k = out.len() as f64;
    match (spec.kind, activation) {
        (LossKind::BinaryCrossEntropy, Activation::Sigmoid) => {
            let mut total = 0.0;
            let delta = z
                .iter()
                .zip(out)
                .zip(targets)
                .enumerate()
                .map(|(c, ((&zc, &p), &y))| {
                    let (w, v) = (spec.pos_w(c), spec.neg_w(c));
                    total += w * y * softplus(-zc) + v * (1.0 - y) * softplus(zc);
                    (w * y * (p - 1.0) + v * (1.0 - y) * p) / k
                })
                .collect();
            Ok((total / k, delta))
        }
        (LossKind::CrossEntropy, Activation::Identity) => {
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + z.iter().map(|&x| (x - m).exp()).sum::<f64>().ln();
            let probs: Vec<f64> = z.iter().map(|&x| (x - lse).exp()).collect();
            let s: f64 = targets.iter().enumerate().map(|(c, y)| spec.pos_w(c) * y).sum();
            let total: f64 = targets
                .iter()
                .zip(z)
                .enumerate()
                .map(|(c, (y, &zc))| spec.pos_w(c) * y * (lse - zc))
                .sum();
            let delta = probs
                .iter()
                .zip(targets)
                .enumerate()
                .map(|(c, (p, y))| (s * p - spec.pos_w(c) * y) / k)
                .collect();
            Ok((total / k, delta))
        }
        (kind, act) => {
            let l = loss(spec, out, targets)?;
            let delta = out
                .iter()
                .zip(z)
                .zip(targets)
                .enumerate()
                .map(|(c, ((&p, &zc), &y))| {
                    let dp = match kind {
                        LossKind::BinaryCrossEntropy => {
                            -(spec.pos_w(c) * y / p) + spec.neg_w(c) * (1.0 - y) / (1.0 - p)
                        }
                        LossKind::CrossEntropy => -spec.pos_w(c) * y / p,
                    };
                    dp / k * act.derivative(zc, p)
                })
                .collect();
            Ok((l, delta))
        }
    }
}
