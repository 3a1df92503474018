//! Metrics, balanced accuracy, learning curves, correlations, published
//! baseline fixtures and report rendering.

mod agreement;
mod correlation;
mod curve;
pub mod fixtures;
mod metrics;
mod report;

use thiserror::Error;

pub use agreement::{questionmark_agreement, QuestionMarkAgreement};
pub use correlation::{
    average_ranks, cumulative_durations, duration_score_correlation, pearson, spearman, top_scores,
    Correlation,
};
pub use curve::{curve_subsets, default_fractions, learning_curve, CurvePoint};
pub use metrics::{
    balanced_accuracy, binary_balanced_accuracy, binary_metrics, f1_from_pr, macro_f1,
    per_class_counts, BalancedAccuracy, BinaryMetrics, ConfusionCounts,
};
pub use report::{fmt_opt, render_comparison, write_timeline, ClassReport, EvalReport, RunMeta};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no class has positive samples")]
    NoPositives,
    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("correlation undefined for constant input")]
    ConstantInput,
    #[error("fraction {0} outside (0, 1]")]
    InvalidFraction(f64),
    #[error("training subset at fraction {fraction} has no positive sample")]
    FractionTooSmall { fraction: f64 },
    #[error("trainer failed: {0}")]
    Trainer(String),
    #[error("io: {0}")]
    Io(String),
}
