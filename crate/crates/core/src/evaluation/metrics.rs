use serde::{Deserialize, Serialize};

use super::EvalError;

/// Per-class binary confusion counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn from_predictions(predicted: &[bool], truth: &[bool]) -> Result<Self, EvalError> {
        if predicted.len() != truth.len() {
            return Err(EvalError::LengthMismatch {
                left: predicted.len(),
                right: truth.len(),
            });
        }
        let mut c = Self::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            c.record(p, t);
        }
        Ok(c)
    }

    pub fn record(&mut self, predicted: bool, truth: bool) {
        match (predicted, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Recall of the negative class.
    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    /// `2tp / (2tp + fp + fn)`; equal to the harmonic mean of precision and
    /// recall whenever both are defined. Undefined with no positives on
    /// either side.
    pub fn f1(&self) -> Option<f64> {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

impl std::ops::AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.tn += o.tn;
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Harmonic mean of precision and recall; `None` when both are zero.
pub fn f1_from_pr(precision: f64, recall: f64) -> Option<f64> {
    let s = precision + recall;
    (s > 0.0).then(|| 2.0 * precision * recall / s)
}

/// Metrics of one binary head. `None` marks an undefined value (zero
/// denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn binary_metrics(c: &ConfusionCounts) -> BinaryMetrics {
    BinaryMetrics {
        accuracy: c.accuracy(),
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedAccuracy {
    pub value: f64,
    /// Classes left out because they have no positive samples.
    pub excluded: Vec<usize>,
}

/// Mean per-class recall over the classes that have positives.
pub fn balanced_accuracy(classes: &[ConfusionCounts]) -> Result<BalancedAccuracy, EvalError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut excluded = Vec::new();
    for (i, c) in classes.iter().enumerate() {
        match c.recall() {
            Some(r) => {
                sum += r;
                n += 1;
            }
            None => excluded.push(i),
        }
    }
    if n == 0 {
        return Err(EvalError::NoPositives);
    }
    Ok(BalancedAccuracy {
        value: sum / n as f64,
        excluded,
    })
}

/// Balanced accuracy of a single binary head: mean of the positive and
/// negative class recalls.
pub fn binary_balanced_accuracy(c: &ConfusionCounts) -> Option<f64> {
    Some((c.recall()? + c.specificity()?) / 2.0)
}

/// Per-class counts for multi-label predictions, rows are samples.
pub fn per_class_counts<P, T>(predicted: &[P], truth: &[T]) -> Result<Vec<ConfusionCounts>, EvalError>
where
    P: AsRef<[bool]>,
    T: AsRef<[bool]>,
{
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    let k = truth.first().map_or(0, |t| t.as_ref().len());
    let mut out = vec![ConfusionCounts::default(); k];
    for (p, t) in predicted.iter().zip(truth) {
        let (p, t) = (p.as_ref(), t.as_ref());
        if p.len() != k || t.len() != k {
            return Err(EvalError::LengthMismatch {
                left: p.len(),
                right: k,
            });
        }
        for c in 0..k {
            out[c].record(p[c], t[c]);
        }
    }
    Ok(out)
}

/// Mean F1 over classes where it is defined, 0 when none is.
pub fn macro_f1(classes: &[ConfusionCounts]) -> f64 {
    let defined: Vec<f64> = classes.iter().filter_map(|c| c.f1()).collect();
    if defined.is_empty() {
        0.0
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_all_negative() {
        let c = ConfusionCounts::new(0, 0, 0, 10);
        let m = binary_metrics(&c);
        assert_eq!(m.accuracy, Some(1.0));
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, None);
        assert_eq!(m.f1, None);
    }

    #[test]
    fn balanced_accuracy_examples() {
        let classes = [
            ConfusionCounts::new(4, 0, 0, 6),
            ConfusionCounts::new(2, 1, 2, 5),
            ConfusionCounts::new(0, 3, 3, 4),
            ConfusionCounts::new(0, 2, 0, 8),
        ];
        let b = balanced_accuracy(&classes).unwrap();
        assert_relative_eq!(b.value, 0.5);
        assert_eq!(b.excluded, vec![3]);
        let same = [ConfusionCounts::new(3, 0, 1, 0), ConfusionCounts::new(6, 9, 2, 1)];
        assert_relative_eq!(balanced_accuracy(&same).unwrap().value, 0.75);
        assert_eq!(
            balanced_accuracy(&[ConfusionCounts::new(0, 1, 0, 1)]).unwrap_err(),
            EvalError::NoPositives
        );
        let binary = ConfusionCounts::new(8, 5, 2, 5);
        assert_relative_eq!(binary_balanced_accuracy(&binary).unwrap(), 0.65);
    }

    #[test]
    fn random_predictor_balanced_accuracy_is_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = 4;
        let truth: Vec<Vec<bool>> = (0..10_000)
            .map(|_| (0..k).map(|c| rng.random_bool(0.1 + 0.2 * c as f64)).collect())
            .collect();
        let pred: Vec<Vec<bool>> = (0..10_000)
            .map(|_| (0..k).map(|_| rng.random_bool(0.5)).collect())
            .collect();
        for c in per_class_counts(&pred, &truth).unwrap() {
            let b = binary_balanced_accuracy(&c).unwrap();
            assert!((b - 0.5).abs() < 0.03, "{b}");
        }
    }

    #[test]
    fn f1_from_counts_matches_harmonic_mean() {
        let c = ConfusionCounts::new(7, 3, 5, 10);
        let h = f1_from_pr(c.precision().unwrap(), c.recall().unwrap()).unwrap();
        assert_relative_eq!(c.f1().unwrap(), h, epsilon = 1e-12);
        assert_eq!(f1_from_pr(0.0, 0.0), None);
    }

    #[test]
    fn per_class_counts_checks_shapes() {
        let p = vec![vec![true, false]];
        let t = vec![vec![true]];
        assert!(per_class_counts(&p, &t).is_err());
        assert!(ConfusionCounts::from_predictions(&[true], &[]).is_err());
    }

    proptest! {
        #[test]
        fn f1_symmetric_and_bounded(p in 0.001f64..1.0, r in 0.001f64..1.0) {
            let f = f1_from_pr(p, r).unwrap();
            prop_assert!((f - f1_from_pr(r, p).unwrap()).abs() < 1e-15);
            prop_assert!(f <= (p + r) / 2.0 + 1e-12);
            prop_assert!(f <= p.max(r) + 1e-12);
            prop_assert!(f >= p.min(r) - 1e-12);
        }

        #[test]
        fn counts_sum_to_samples(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..200)) {
            let (p, t): (Vec<bool>, Vec<bool>) = pairs.iter().cloned().unzip();
            let c = ConfusionCounts::from_predictions(&p, &t).unwrap();
            prop_assert_eq!(c.total(), pairs.len() as u64);
            if let Some(a) = c.accuracy() {
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
    }
}
