use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::domain::{LectureId, TimeInterval, TranscriptEvent};

#[derive(Debug, Deserialize)]
struct Record {
    lecture_id: Option<String>,
    start_s: Option<f64>,
    end_s: Option<f64>,
    text: Option<String>,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    lecture_id: &'a str,
    start_s: f64,
    end_s: f64,
    text: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TranscriptWarning {
    /// A record starts before the previous record of the same lecture.
    NonMonotonicTimestamps { line: usize, lecture_id: LectureId },
}

#[derive(Debug, Clone, Default)]
pub struct TranscriptParse {
    pub events: Vec<TranscriptEvent>,
    pub warnings: Vec<TranscriptWarning>,
}

/// Splits text at terminal punctuation (`.`, `?`, `!`), keeping the
/// terminator with its sentence. Fragments without letters or digits are
/// dropped.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if matches!(c, '.' | '?' | '!') {
            let end = i + c.len_utf8();
            push_sentence(&mut out, &text[start..end]);
            start = end;
        }
    }
    push_sentence(&mut out, &text[start..]);
    out
}

fn push_sentence<'a>(out: &mut Vec<&'a str>, s: &'a str) {
    let s = s.trim();
    if s.chars().any(char::is_alphanumeric) {
        out.push(s);
    }
}

/// Number of sentences in a non-empty text, never less than one.
pub fn count_sentences(text: &str) -> usize {
    split_sentences(text).len().max(1)
}

/// Reads transcript JSON-lines, one `{lecture_id, start_s, end_s, text}`
/// object per line. Blank lines are skipped; line numbers are 1-based.
pub fn parse_transcript<R: BufRead>(reader: R) -> Result<TranscriptParse, IngestError> {
    let mut out = TranscriptParse::default();
    let mut last_start: BTreeMap<LectureId, f64> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| IngestError::MalformedRecord {
            line: line_no,
            reason,
        };
        let rec: Record = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let lecture_id = rec
            .lecture_id
            .ok_or_else(|| malformed("missing `lecture_id`".into()))?;
        let start = rec
            .start_s
            .ok_or_else(|| malformed("missing `start_s`".into()))?;
        let end = rec.end_s.ok_or_else(|| malformed("missing `end_s`".into()))?;
        let text = rec.text.ok_or_else(|| malformed("missing `text`".into()))?;
        let span = TimeInterval::new(start, end).map_err(|e| malformed(e.to_string()))?;
        if span.duration() <= 0.0 {
            return Err(malformed("zero-length span".into()));
        }
        let text = text.trim().to_owned();
        if text.is_empty() {
            return Err(malformed("empty text".into()));
        }
        let lecture_id = LectureId(lecture_id);
        if let Some(&prev) = last_start.get(&lecture_id) {
            if start < prev {
                out.warnings.push(TranscriptWarning::NonMonotonicTimestamps {
                    line: line_no,
                    lecture_id: lecture_id.clone(),
                });
            }
        }
        last_start.insert(lecture_id.clone(), start);
        out.events.push(TranscriptEvent {
            lecture_id,
            span,
            sentence_count: count_sentences(&text),
            text,
        });
    }
    Ok(out)
}

pub fn write_transcript<W: Write>(
    mut writer: W,
    events: &[TranscriptEvent],
) -> Result<(), IngestError> {
    for e in events {
        let rec = RecordOut {
            lecture_id: e.lecture_id.as_str(),
            start_s: e.span.start_s,
            end_s: e.span.end_s,
            text: &e.text,
        };
        serde_json::to_writer(&mut writer, &rec)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<TranscriptParse, IngestError> {
        parse_transcript(s.as_bytes())
    }

    #[test]
    fn sentence_counts() {
        let p = parse(
            r#"{"lecture_id":"L1","start_s":3.0,"end_s":9.5,"text":"Who is this guy? Who is this guy printed on this bill?"}"#,
        )
        .unwrap();
        assert_eq!(p.events[0].sentence_count, 2);
        let p = parse(r#"{"lecture_id":"L1","start_s":0,"end_s":4,"text":"so cool."}"#).unwrap();
        assert_eq!(p.events[0].sentence_count, 1);
        assert_eq!(count_sentences("no terminal punctuation"), 1);
        assert_eq!(count_sentences("4 x -5. matters 7. is this"), 3);
        assert_eq!(split_sentences("right? um?"), vec!["right?", "um?"]);
    }

    #[test]
    fn rejects_bad_records() {
        let e = parse(r#"{"lecture_id":"L1","start_s":5,"end_s":4,"text":"x"}"#).unwrap_err();
        assert!(matches!(e, IngestError::MalformedRecord { line: 1, .. }));
        let e = parse(r#"{"lecture_id":"L1","start_s":1,"end_s":4}"#).unwrap_err();
        assert!(matches!(e, IngestError::MalformedRecord { .. }));
        let e = parse(r#"{"lecture_id":"L1","start_s":1,"end_s":4,"text":"  "}"#).unwrap_err();
        assert!(matches!(e, IngestError::MalformedRecord { .. }));
        let e = parse("not json").unwrap_err();
        assert!(matches!(e, IngestError::MalformedRecord { .. }));
    }

    #[test]
    fn non_monotonic_is_a_warning() {
        let p = parse(concat!(
            r#"{"lecture_id":"L1","start_s":10,"end_s":12,"text":"a."}"#,
            "\n\n",
            r#"{"lecture_id":"L1","start_s":2,"end_s":4,"text":"b."}"#,
            "\n"
        ))
        .unwrap();
        assert_eq!(p.events.len(), 2);
        assert_eq!(
            p.warnings,
            vec![TranscriptWarning::NonMonotonicTimestamps {
                line: 3,
                lecture_id: "L1".into()
            }]
        );
    }

    #[test]
    fn write_then_parse() {
        let ev = TranscriptEvent {
            lecture_id: "L9".into(),
            span: TimeInterval::new(1.25, 7.5).unwrap(),
            text: "what is the value here at this point?".into(),
            sentence_count: 1,
        };
        let mut buf = Vec::new();
        write_transcript(&mut buf, std::slice::from_ref(&ev)).unwrap();
        assert_eq!(parse_transcript(&buf[..]).unwrap().events, vec![ev]);
    }
}
