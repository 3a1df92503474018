//! Published baseline scores used as metric fixtures.

use crate::domain::FeatureId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineRow {
    pub model: &'static str,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Question detection (AQ or GQ) baselines.
pub const QUESTION_TASK_BASELINES: [BaselineRow; 6] = [
    BaselineRow { model: "BERT", accuracy: 0.831, precision: 0.332, recall: 0.453, f1: 0.383 },
    BaselineRow { model: "VowpalWabbit", accuracy: 0.757, precision: 0.481, recall: 0.387, f1: 0.429 },
    BaselineRow { model: "FastText", accuracy: 0.745, precision: 0.442, recall: 0.321, f1: 0.373 },
    BaselineRow { model: "RoBERTa", accuracy: 0.116, precision: 0.116, recall: 1.00, f1: 0.207 },
    BaselineRow { model: "XLNet", accuracy: 0.690, precision: 0.177, recall: 0.459, f1: 0.255 },
    BaselineRow { model: "TF-IDF", accuracy: 0.884, precision: 0.461, recall: 0.100, f1: 0.164 },
];

/// Per-feature F1 baselines for the six text classes, in [`FeatureId::TEXT`] order.
pub const PER_FEATURE_BASELINES: [(&str, [f64; 6]); 6] = [
    ("BERT", [0.29, 0.27, 0.03, 0.08, 0.31, 0.02]),
    ("VowpalWabbit", [0.32, 0.27, 0.17, 0.37, 0.52, 0.02]),
    ("FastText", [0.04, 0.03, 0.03, 0.16, 0.43, 0.0]),
    ("RoBERTa", [0.28, 0.25, 0.20, 0.20, 0.45, 0.06]),
    ("XLNet", [0.29, 0.24, 0.19, 0.21, 0.45, 0.02]),
    ("TF-IDF", [0.08, 0.09, 0.05, 0.21, 0.63, 0.0]),
];

/// Best published F1 per text feature across the baselines.
pub fn baseline_top_scores() -> Vec<(FeatureId, f64)> {
    FeatureId::TEXT
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let best = PER_FEATURE_BASELINES
                .iter()
                .map(|(_, s)| s[i])
                .fold(0.0, f64::max);
            (f, best)
        })
        .collect()
}
