use serde::{Deserialize, Serialize};

use crate::ingestion::split_sentences;
use crate::labeling::LabeledTextSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionMarkAgreement {
    pub question_mark_sentences: usize,
    /// Of those, sentences inside samples labeled AQ or GQ.
    pub labeled_questions: usize,
    /// `None` when no sentence carries a question mark.
    pub rate: Option<f64>,
}

/// How often sentences with a question mark sit in question-labeled samples.
pub fn questionmark_agreement(samples: &[LabeledTextSample]) -> QuestionMarkAgreement {
    let mut qm = 0;
    let mut labeled = 0;
    for s in samples {
        let n = split_sentences(&s.transcript.text)
            .iter()
            .filter(|x| x.contains('?'))
            .count();
        qm += n;
        if s.has_question() {
            labeled += n;
        }
    }
    QuestionMarkAgreement {
        question_mark_sentences: qm,
        labeled_questions: labeled,
        rate: (qm > 0).then(|| labeled as f64 / qm as f64),
    }
}
