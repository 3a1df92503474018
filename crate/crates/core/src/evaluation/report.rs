use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{balanced_accuracy, per_class_counts, ConfusionCounts, EvalError};
use crate::labeling::LabeledTextSample;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub model: String,
    pub task: String,
    pub seed: u64,
    /// SHA-256 of the split manifest the run used, if known.
    #[serde(default)]
    pub split_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: String,
    pub counts: ConfusionCounts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub meta: RunMeta,
    pub n_samples: usize,
    pub classes: Vec<ClassReport>,
    /// Fraction of correct (sample, class) decisions.
    pub accuracy: f64,
    pub balanced_accuracy: Option<f64>,
    /// Classes without positives, left out of the balanced accuracy.
    pub excluded_classes: Vec<String>,
    /// Mean F1 over classes where it is defined.
    pub macro_f1: f64,
}

impl EvalReport {
    pub fn from_predictions<P, T>(
        meta: RunMeta,
        class_names: &[String],
        predicted: &[P],
        truth: &[T],
    ) -> Result<Self, EvalError>
    where
        P: AsRef<[bool]>,
        T: AsRef<[bool]>,
    {
        let counts = per_class_counts(predicted, truth)?;
        if counts.len() != class_names.len() && !truth.is_empty() {
            return Err(EvalError::LengthMismatch {
                left: counts.len(),
                right: class_names.len(),
            });
        }
        Ok(Self::from_counts(meta, class_names, &counts, truth.len()))
    }

    pub fn from_counts(
        meta: RunMeta,
        class_names: &[String],
        counts: &[ConfusionCounts],
        n_samples: usize,
    ) -> Self {
        let mut total = ConfusionCounts::default();
        for c in counts {
            total += *c;
        }
        let (balanced, excluded) = match balanced_accuracy(counts) {
            Ok(b) => (Some(b.value), b.excluded),
            Err(_) => (None, (0..counts.len()).collect()),
        };
        Self {
            meta,
            n_samples,
            classes: class_names
                .iter()
                .zip(counts)
                .map(|(n, c)| ClassReport {
                    class: n.clone(),
                    counts: *c,
                    precision: c.precision(),
                    recall: c.recall(),
                    f1: c.f1(),
                })
                .collect(),
            accuracy: total.accuracy().unwrap_or(0.0),
            balanced_accuracy: balanced,
            excluded_classes: excluded.iter().map(|&i| class_names[i].clone()).collect(),
            macro_f1: super::macro_f1(counts),
        }
    }

    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "model: {}  task: {}  seed: {}  samples: {}",
            self.meta.model, self.meta.task, self.meta.seed, self.n_samples
        );
        let _ = writeln!(s, "{:<8} {:>9} {:>9} {:>9} {:>7} {:>7} {:>7} {:>7}", "class", "precision", "recall", "f1", "tp", "fp", "fn", "tn");
        for c in &self.classes {
            let _ = writeln!(
                s,
                "{:<8} {:>9} {:>9} {:>9} {:>7} {:>7} {:>7} {:>7}",
                c.class,
                fmt_opt(c.precision),
                fmt_opt(c.recall),
                fmt_opt(c.f1),
                c.counts.tp,
                c.counts.fp,
                c.counts.fn_,
                c.counts.tn
            );
        }
        let _ = writeln!(s, "accuracy {:.3}  balanced accuracy {}  macro F1 {:.3}", self.accuracy, fmt_opt(self.balanced_accuracy), self.macro_f1);
        if !self.excluded_classes.is_empty() {
            let _ = writeln!(s, "excluded (no positives): {}", self.excluded_classes.join(", "));
        }
        s
    }
}

/// Three decimals, or `n/a` for an undefined value.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.3}"))
}

/// Side-by-side per-class F1 of several reports, one row per report.
pub fn render_comparison(reports: &[EvalReport]) -> String {
    let mut s = String::new();
    let Some(first) = reports.first() else {
        return s;
    };
    let _ = write!(s, "{:<14}", "model");
    for c in &first.classes {
        let _ = write!(s, " {:>6}", c.class);
    }
    let _ = writeln!(s, " {:>8}", "macroF1");
    for r in reports {
        let _ = write!(s, "{:<14}", r.meta.model);
        for c in &r.classes {
            let _ = write!(s, " {:>6}", c.f1.map_or_else(|| "n/a".to_owned(), |f| format!("{f:.2}")));
        }
        let _ = writeln!(s, " {:>8.3}", r.macro_f1);
    }
    s
}

#[derive(Serialize)]
struct TimelineRow<'a> {
    lecture_id: &'a str,
    feature: &'a str,
    start_s: f64,
    end_s: f64,
}

/// One JSON line per (sample, label) for plotting, in sample order.
pub fn write_timeline<W: Write>(samples: &[LabeledTextSample], mut w: W) -> Result<(), EvalError> {
    for s in samples {
        for f in &s.labels {
            let row = TimelineRow {
                lecture_id: s.transcript.lecture_id.as_str(),
                feature: f.code(),
                start_s: s.transcript.span.start_s,
                end_s: s.transcript.span.end_s,
            };
            serde_json::to_writer(&mut w, &row).map_err(|e| EvalError::Io(e.to_string()))?;
            w.write_all(b"\n").map_err(|e| EvalError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["AQ".into(), "GQ".into()]
    }

    #[test]
    fn report_values() {
        let pred = vec![vec![true, false], vec![false, false], vec![true, true], vec![false, false]];
        let truth = vec![vec![true, false], vec![true, false], vec![false, false], vec![false, false]];
        let r = EvalReport::from_predictions(RunMeta::default(), &names(), &pred, &truth).unwrap();
        assert_eq!(r.classes[0].counts, ConfusionCounts::new(1, 1, 1, 1));
        assert_eq!(r.classes[1].recall, None);
        assert_eq!(r.balanced_accuracy, Some(0.5));
        assert_eq!(r.excluded_classes, vec!["GQ".to_owned()]);
        assert_eq!(r.accuracy, 5.0 / 8.0);
        let table = r.render_table();
        assert!(table.contains("n/a"));
        assert!(table.contains("excluded (no positives): GQ"));
        let back: EvalReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn comparison_has_row_per_report() {
        let pred = vec![vec![true, false]];
        let r = EvalReport::from_predictions(RunMeta { model: "tfidf".into(), ..RunMeta::default() }, &names(), &pred, &pred).unwrap();
        let t = render_comparison(&[r.clone(), r]);
        assert_eq!(t.lines().count(), 3);
        assert!(t.lines().nth(1).unwrap().starts_with("tfidf"));
    }
}
