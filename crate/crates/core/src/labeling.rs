//! Label transcript events by interval intersection with annotations, and
//! select one frame per visual event for the multi-view experiment.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    Experiment, FeatureId, LectureId, LectureMeta, Observation, ObserverId, TimeInterval,
    TranscriptEvent,
};
use crate::ingestion::count_sentences;
use crate::par::{self, Execution};

#[derive(Debug, Error, PartialEq)]
pub enum LabelError {
    #[error("transcript references lecture `{0}` with no annotations")]
    UnknownLecture(LectureId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelPolicy {
    /// A label is set when any observer marks an intersecting event.
    #[default]
    Union,
    /// A label is set when strictly more than half of the lecture's observers do.
    Majority,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTextSample {
    pub transcript: TranscriptEvent,
    pub labels: BTreeSet<FeatureId>,
    pub source_observers: BTreeSet<ObserverId>,
}

impl LabeledTextSample {
    pub fn has_question(&self) -> bool {
        self.labels.iter().any(|f| f.is_question())
    }
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    lecture_id: LectureId,
    start_s: f64,
    end_s: f64,
    text: String,
    labels: Vec<FeatureId>,
}

impl Serialize for LabeledTextSample {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SampleRecord {
            lecture_id: self.transcript.lecture_id.clone(),
            start_s: self.transcript.span.start_s,
            end_s: self.transcript.span.end_s,
            text: self.transcript.text.clone(),
            labels: self.labels.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabeledTextSample {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = SampleRecord::deserialize(d)?;
        let span = TimeInterval::new(r.start_s, r.end_s).map_err(serde::de::Error::custom)?;
        Ok(LabeledTextSample {
            transcript: TranscriptEvent {
                lecture_id: r.lecture_id,
                span,
                sentence_count: count_sentences(&r.text),
                text: r.text,
            },
            labels: r.labels.into_iter().collect(),
            source_observers: BTreeSet::new(),
        })
    }
}

struct LectureAnnotations<'a> {
    observers: Vec<&'a ObserverId>,
    /// Text-feature events sorted by start: (span, feature, observer index).
    events: Vec<(TimeInterval, FeatureId, usize)>,
}

fn index_annotations(annotations: &[Observation]) -> BTreeMap<&LectureId, LectureAnnotations<'_>> {
    let mut by_lecture: BTreeMap<&LectureId, LectureAnnotations<'_>> = BTreeMap::new();
    for obs in annotations {
        let entry = by_lecture
            .entry(&obs.lecture_id)
            .or_insert_with(|| LectureAnnotations {
                observers: Vec::new(),
                events: Vec::new(),
            });
        let oi = match entry.observers.iter().position(|o| **o == obs.observer_id) {
            Some(i) => i,
            None => {
                entry.observers.push(&obs.observer_id);
                entry.observers.len() - 1
            }
        };
        entry.events.extend(
            obs.events
                .iter()
                .filter(|e| e.feature.experiment() == Experiment::Text)
                .map(|e| (e.span, e.feature, oi)),
        );
    }
    for la in by_lecture.values_mut() {
        la.events
            .sort_by(|a, b| a.0.start_s.total_cmp(&b.0.start_s));
    }
    by_lecture
}

/// Sweep over one lecture: transcripts and annotation events both in start
/// order, with an active set of annotations that may still intersect.
fn label_lecture(
    transcripts: &[&TranscriptEvent],
    ann: &LectureAnnotations<'_>,
    policy: LabelPolicy,
) -> Vec<LabeledTextSample> {
    let n_obs = ann.observers.len();
    let mut next = 0;
    let mut active: Vec<usize> = Vec::new();
    let mut out = Vec::with_capacity(transcripts.len());
    for t in transcripts {
        let span = t.span;
        // `<=` admits events starting at a point transcript's instant
        while next < ann.events.len() && ann.events[next].0.start_s <= span.end_s {
            active.push(next);
            next += 1;
        }
        active.retain(|&i| {
            let iv = ann.events[i].0;
            if iv.is_point() {
                iv.start_s >= span.start_s
            } else {
                iv.end_s > span.start_s
            }
        });
        // hits[feature] = observers that marked an intersecting event
        let mut hits: BTreeMap<FeatureId, BTreeSet<usize>> = BTreeMap::new();
        for &i in &active {
            let (iv, f, o) = ann.events[i];
            if iv.intersects(&span) {
                hits.entry(f).or_default().insert(o);
            }
        }
        let mut labels = BTreeSet::new();
        let mut sources = BTreeSet::new();
        for (f, observers) in hits {
            let keep = match policy {
                LabelPolicy::Union => !observers.is_empty(),
                LabelPolicy::Majority => 2 * observers.len() > n_obs,
            };
            if keep {
                labels.insert(f);
                sources.extend(observers.iter().map(|&o| ann.observers[o].clone()));
            }
        }
        out.push(LabeledTextSample {
            transcript: (*t).clone(),
            labels,
            source_observers: sources,
        });
    }
    out
}

/// Labels every transcript event with the text-task features whose annotated
/// events intersect it. Output is ordered by (lecture, start, end).
pub fn label_transcripts(
    events: &[TranscriptEvent],
    annotations: &[Observation],
    policy: LabelPolicy,
) -> Result<Vec<LabeledTextSample>, LabelError> {
    label_transcripts_with(Execution::default(), events, annotations, policy)
}

pub fn label_transcripts_with(
    exec: Execution,
    events: &[TranscriptEvent],
    annotations: &[Observation],
    policy: LabelPolicy,
) -> Result<Vec<LabeledTextSample>, LabelError> {
    let index = index_annotations(annotations);
    let mut by_lecture: BTreeMap<&LectureId, Vec<&TranscriptEvent>> = BTreeMap::new();
    for e in events {
        if !index.contains_key(&e.lecture_id) {
            return Err(LabelError::UnknownLecture(e.lecture_id.clone()));
        }
        by_lecture.entry(&e.lecture_id).or_default().push(e);
    }
    let mut jobs: Vec<(&LectureId, Vec<&TranscriptEvent>)> = by_lecture.into_iter().collect();
    for (_, ts) in &mut jobs {
        ts.sort_by(|a, b| {
            a.span
                .start_s
                .total_cmp(&b.span.start_s)
                .then(a.span.end_s.total_cmp(&b.span.end_s))
        });
    }
    let results = par::map(exec, &jobs, |(lecture, ts)| {
        label_lecture(ts, &index[lecture], policy)
    });
    Ok(results.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSelection {
    /// Events whose midpoints share a bucket of this width are simultaneous.
    pub bucket_s: f64,
    /// Re-intersect each midpoint against all visual events to add
    /// co-occurring labels.
    pub multi_label: bool,
}

impl Default for FrameSelection {
    fn default() -> Self {
        Self {
            bucket_s: 1.0,
            multi_label: true,
        }
    }
}

pub const VISUAL_CLASSES: usize = FeatureId::VISUAL.len();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSampleSpec {
    pub frame_id: String,
    pub lecture_id: LectureId,
    pub time_s: f64,
    pub source_feature: FeatureId,
    pub source_span: TimeInterval,
    /// Indexed by [`FeatureId::VISUAL`] order.
    pub labels: [bool; VISUAL_CLASSES],
}

pub fn frame_id(lecture: &LectureId, time_s: f64) -> String {
    format!("{lecture}@{time_s:.3}")
}

/// One frame per retained visual event, at the event's midpoint.
pub fn select_frame_samples(
    annotations: &[Observation],
    metas: &[LectureMeta],
    selection: FrameSelection,
) -> Vec<FrameSampleSpec> {
    let durations: BTreeMap<&LectureId, f64> =
        metas.iter().map(|m| (&m.lecture_id, m.duration_s)).collect();
    let mut by_lecture: BTreeMap<&LectureId, Vec<(FeatureId, TimeInterval)>> = BTreeMap::new();
    for obs in annotations {
        by_lecture.entry(&obs.lecture_id).or_default().extend(
            obs.events
                .iter()
                .filter(|e| e.feature.visual_index().is_some())
                .map(|e| (e.feature, e.span)),
        );
    }

    let mut out = Vec::new();
    for (lecture, mut events) in by_lecture {
        let Some(&duration) = durations.get(lecture) else {
            continue;
        };
        events.sort_by(|a, b| {
            a.1.start_s
                .total_cmp(&b.1.start_s)
                .then(a.1.end_s.total_cmp(&b.1.end_s))
                .then(a.0.cmp(&b.0))
        });
        events.dedup();

        let mut buckets: BTreeMap<i64, (FeatureId, TimeInterval)> = BTreeMap::new();
        for &(f, span) in &events {
            let mid = span.midpoint();
            if !(0.0..=duration).contains(&mid) {
                continue;
            }
            let b = (mid / selection.bucket_s).floor() as i64;
            buckets.entry(b).or_insert((f, span));
        }

        let mut specs: Vec<FrameSampleSpec> = buckets
            .into_values()
            .map(|(f, span)| {
                let time_s = span.midpoint();
                let mut labels = [false; VISUAL_CLASSES];
                labels[f.visual_index().expect("visual")] = true;
                if selection.multi_label {
                    for &(g, other) in &events {
                        if other.contains(time_s) || (other.is_point() && other.start_s == time_s)
                        {
                            labels[g.visual_index().expect("visual")] = true;
                        }
                    }
                }
                FrameSampleSpec {
                    frame_id: frame_id(lecture, time_s),
                    lecture_id: lecture.clone(),
                    time_s,
                    source_feature: f,
                    source_span: span,
                    labels,
                }
            })
            .collect();
        specs.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
        out.extend(specs);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AnnotationEvent, EventKind};
    use crate::ingestion::{generate_synthetic, SynthConfig};

    fn transcript(lecture: &str, a: f64, b: f64) -> TranscriptEvent {
        TranscriptEvent {
            lecture_id: lecture.into(),
            span: TimeInterval::new(a, b).unwrap(),
            text: "x.".into(),
            sentence_count: 1,
        }
    }

    fn event(observer: &str, f: FeatureId, a: f64, b: f64) -> AnnotationEvent {
        AnnotationEvent {
            lecture_id: "L1".into(),
            observer_id: observer.into(),
            feature: f,
            kind: if a == b { EventKind::Point } else { EventKind::State },
            span: TimeInterval::new(a, b).unwrap(),
        }
    }

    fn obs(observer: &str, events: Vec<AnnotationEvent>) -> Observation {
        Observation {
            lecture_id: "L1".into(),
            observer_id: observer.into(),
            events,
        }
    }

    #[test]
    fn single_intersection_and_boundary() {
        let a = vec![obs("o1", vec![event("o1", FeatureId::AskingQuestions, 15.0, 30.0)])];
        let s = label_transcripts(&[transcript("L1", 10.0, 17.0)], &a, LabelPolicy::Union).unwrap();
        assert_eq!(s[0].labels, [FeatureId::AskingQuestions].into_iter().collect());

        let a = vec![obs("o1", vec![event("o1", FeatureId::AskingQuestions, 5.0, 9.0)])];
        let s = label_transcripts(&[transcript("L1", 0.0, 5.0)], &a, LabelPolicy::Union).unwrap();
        assert!(s[0].labels.is_empty());
    }

    #[test]
    fn visual_features_are_not_text_labels() {
        let a = vec![obs("o1", vec![event("o1", FeatureId::EyeContact, 0.0, 50.0)])];
        let s = label_transcripts(&[transcript("L1", 1.0, 5.0)], &a, LabelPolicy::Union).unwrap();
        assert!(s[0].labels.is_empty());
    }

    #[test]
    fn unknown_lecture() {
        let a = vec![obs("o1", vec![])];
        let e = label_transcripts(&[transcript("L2", 0.0, 1.0)], &a, LabelPolicy::Union).unwrap_err();
        assert_eq!(e, LabelError::UnknownLecture("L2".into()));
    }

    #[test]
    fn majority_needs_strictly_more_than_half() {
        let f = FeatureId::Outline;
        let mk = |n_marking: usize| {
            (0..3)
                .map(|i| {
                    let name = format!("o{i}");
                    let evs = if i < n_marking {
                        vec![event(&name, f, 0.0, 10.0)]
                    } else {
                        vec![event(&name, FeatureId::SummingUp, 50.0, 50.0)]
                    };
                    obs(&name, evs)
                })
                .collect::<Vec<_>>()
        };
        let t = [transcript("L1", 2.0, 4.0)];
        let one = label_transcripts(&t, &mk(1), LabelPolicy::Majority).unwrap();
        let two = label_transcripts(&t, &mk(2), LabelPolicy::Majority).unwrap();
        assert!(one[0].labels.is_empty());
        assert!(two[0].labels.contains(&f));
        assert_eq!(two[0].source_observers.len(), 2);
        let union = label_transcripts(&t, &mk(1), LabelPolicy::Union).unwrap();
        assert!(union[0].labels.contains(&f));
    }

    #[test]
    fn point_events_label_containing_transcript() {
        let a = vec![obs("o1", vec![event("o1", FeatureId::SummingUp, 5.0, 5.0)])];
        let ts = [transcript("L1", 0.0, 5.0), transcript("L1", 5.0, 8.0)];
        let s = label_transcripts(&ts, &a, LabelPolicy::Union).unwrap();
        assert!(s[0].labels.is_empty());
        assert!(s[1].labels.contains(&FeatureId::SummingUp));
    }

    #[test]
    fn point_transcript_inside_event_starting_at_it() {
        let a = vec![obs(
            "o1",
            vec![event("o1", FeatureId::Outline, 5.0, 9.0), event("o1", FeatureId::TestSession, 2.0, 5.0)],
        )];
        let s = label_transcripts(&[transcript("L1", 5.0, 5.0)], &a, LabelPolicy::Union).unwrap();
        assert_eq!(s[0].labels, [FeatureId::Outline].into_iter().collect());
    }

    #[test]
    fn union_reproduces_planted_truth() {
        let cfg = SynthConfig {
            seed: 9,
            n_lectures: 6,
            events_per_lecture: 200,
            ..SynthConfig::default()
        };
        let c = generate_synthetic(&cfg).unwrap();
        let s = label_transcripts(&c.transcripts, &c.observations, LabelPolicy::Union).unwrap();
        for (sample, truth) in s.iter().zip(&c.truth) {
            assert_eq!(&sample.labels, truth);
        }
        let m = label_transcripts(&c.transcripts, &c.observations, LabelPolicy::Majority).unwrap();
        for (u, m) in s.iter().zip(&m) {
            assert!(m.labels.is_subset(&u.labels));
        }
    }

    #[test]
    fn adding_an_event_never_removes_union_labels() {
        let cfg = SynthConfig {
            seed: 4,
            n_lectures: 2,
            events_per_lecture: 80,
            ..SynthConfig::default()
        };
        let c = generate_synthetic(&cfg).unwrap();
        let before = label_transcripts(&c.transcripts, &c.observations, LabelPolicy::Union).unwrap();
        let mut more = c.observations.clone();
        let lecture = more[0].lecture_id.clone();
        let observer = more[0].observer_id.clone();
        more[0].events.push(AnnotationEvent {
            lecture_id: lecture,
            observer_id: observer,
            feature: FeatureId::Outline,
            kind: EventKind::State,
            span: TimeInterval::new(20.0, 90.0).unwrap(),
        });
        let after = label_transcripts(&c.transcripts, &more, LabelPolicy::Union).unwrap();
        for (b, a) in before.iter().zip(&after) {
            assert!(b.labels.is_subset(&a.labels));
        }
    }

    #[test]
    fn sample_json_schema() {
        let s = LabeledTextSample {
            transcript: transcript("L1", 1.0, 2.5),
            labels: [FeatureId::GivingQuestions, FeatureId::AskingQuestions]
                .into_iter()
                .collect(),
            source_observers: BTreeSet::new(),
        };
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"lecture_id":"L1","start_s":1.0,"end_s":2.5,"text":"x.","labels":["AQ","GQ"]}"#
        );
        let back: LabeledTextSample = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    fn meta(d: f64) -> Vec<LectureMeta> {
        vec![LectureMeta {
            lecture_id: "L1".into(),
            series_id: "S1".into(),
            duration_s: d,
        }]
    }

    #[test]
    fn frame_at_midpoint() {
        let a = vec![obs("o1", vec![event("o1", FeatureId::ChartsInSlides, 10.0, 20.0)])];
        let s = select_frame_samples(&a, &meta(100.0), FrameSelection::default());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].time_s, 15.0);
        assert_eq!(s[0].frame_id, "L1@15.000");
    }

    #[test]
    fn duplicates_across_observers_collapse() {
        let a = vec![
            obs("o1", vec![event("o1", FeatureId::ChartsInSlides, 10.0, 20.0)]),
            obs("o2", vec![event("o2", FeatureId::ChartsInSlides, 10.0, 20.0)]),
        ];
        assert_eq!(select_frame_samples(&a, &meta(100.0), FrameSelection::default()).len(), 1);
    }

    #[test]
    fn simultaneous_events_keep_earliest_start() {
        let a = vec![obs(
            "o1",
            vec![
                event("o1", FeatureId::ImagesInSlides, 14.0, 16.2),
                event("o1", FeatureId::ChartsInSlides, 10.0, 20.0),
            ],
        )];
        let sel = FrameSelection {
            multi_label: false,
            ..FrameSelection::default()
        };
        let s = select_frame_samples(&a, &meta(100.0), sel);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].source_feature, FeatureId::ChartsInSlides);
        assert_eq!(s[0].labels.iter().filter(|&&b| b).count(), 1);
    }

    #[test]
    fn midpoint_reintersection_adds_cooccurring_labels() {
        let a = vec![
            obs("o1", vec![event("o1", FeatureId::WhiteboardWriting, 10.0, 20.0)]),
            obs("o2", vec![event("o2", FeatureId::EyeContact, 0.0, 60.0)]),
        ];
        let s = select_frame_samples(&a, &meta(100.0), FrameSelection::default());
        let ww = s.iter().find(|f| f.time_s == 15.0).unwrap();
        // oracle: a label is set iff its event contains the instant 15.0
        let expected: Vec<bool> = FeatureId::VISUAL
            .iter()
            .map(|f| matches!(f, FeatureId::WhiteboardWriting | FeatureId::EyeContact))
            .collect();
        assert_eq!(ww.labels.to_vec(), expected);
    }

    #[test]
    fn frame_specs_are_midpoints_and_no_more_than_events() {
        let cfg = SynthConfig {
            seed: 2,
            n_lectures: 3,
            events_per_lecture: 60,
            visual_events_per_lecture: 80,
            ..SynthConfig::default()
        };
        let c = generate_synthetic(&cfg).unwrap();
        let n_visual = c
            .observations
            .iter()
            .flat_map(|o| &o.events)
            .filter(|e| e.feature.visual_index().is_some())
            .count();
        let specs = select_frame_samples(&c.observations, &c.lectures, FrameSelection::default());
        assert!(!specs.is_empty() && specs.len() <= n_visual);
        for s in &specs {
            assert_eq!(s.time_s, (s.source_span.start_s + s.source_span.end_s) / 2.0);
            assert!(s.labels[s.source_feature.visual_index().unwrap()]);
        }
    }
}
