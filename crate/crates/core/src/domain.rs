//! Domain types and interval algebra shared by every pipeline stage.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! id_newtype {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

id_newtype!(
    /// Identifies one lecture recording.
    LectureId
);
id_newtype!(
    /// Identifies one annotator.
    ObserverId
);
id_newtype!(
    /// Identifies a lecture course (a series of similar-looking recordings).
    SeriesId
);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("interval bound is not finite")]
    NotFinite,
    #[error("interval starts before zero ({0})")]
    NegativeStart(f64),
    #[error("interval end {end} precedes start {start}")]
    Reversed { start: f64, end: f64 },
}

/// A time span in seconds. Intervals are treated as half-open `[start, end)`;
/// a zero-length interval is a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeInterval {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self, IntervalError> {
        if !start_s.is_finite() || !end_s.is_finite() {
            return Err(IntervalError::NotFinite);
        }
        if start_s < 0.0 {
            return Err(IntervalError::NegativeStart(start_s));
        }
        if end_s < start_s {
            return Err(IntervalError::Reversed {
                start: start_s,
                end: end_s,
            });
        }
        Ok(Self { start_s, end_s })
    }

    pub fn point(t: f64) -> Result<Self, IntervalError> {
        Self::new(t, t)
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn is_point(&self) -> bool {
        self.end_s == self.start_s
    }

    pub fn midpoint(&self) -> f64 {
        (self.start_s + self.end_s) / 2.0
    }

    /// Half-open containment of an instant.
    pub fn contains(&self, t: f64) -> bool {
        self.start_s <= t && t < self.end_s
    }

    /// True iff the two spans share positive length, or one is a point that
    /// the other contains. Touching endpoints do not intersect.
    pub fn intersects(&self, other: &TimeInterval) -> bool {
        match (self.is_point(), other.is_point()) {
            (true, true) => false,
            (true, false) => other.contains(self.start_s),
            (false, true) => self.contains(other.start_s),
            (false, false) => self.start_s.max(other.start_s) < self.end_s.min(other.end_s),
        }
    }
}

/// Free-function form of [`TimeInterval::intersects`].
pub fn intersects(a: &TimeInterval, b: &TimeInterval) -> bool {
    a.intersects(b)
}

/// Which experiment a catalog feature belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Experiment {
    Text,
    Visual,
    AudioOnly,
    Unused,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown feature code `{0}`")]
pub struct UnknownFeature(pub String);

macro_rules! feature_catalog {
    ($( $variant:ident => ($code:literal, $exp:ident, $count:expr, $desc:literal) ),+ $(,)?) => {
        /// The full catalog of annotated didactic features.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum FeatureId {
            $( $variant ),+
        }

        impl FeatureId {
            pub const ALL: &'static [FeatureId] = &[ $( FeatureId::$variant ),+ ];

            pub fn code(self) -> &'static str {
                match self { $( FeatureId::$variant => $code ),+ }
            }

            pub fn experiment(self) -> Experiment {
                match self { $( FeatureId::$variant => Experiment::$exp ),+ }
            }

            /// Occurrence count in the original annotated corpus, when one was reported.
            pub fn catalog_occurrences(self) -> Option<u32> {
                match self { $( FeatureId::$variant => $count ),+ }
            }

            pub fn description(self) -> &'static str {
                match self { $( FeatureId::$variant => $desc ),+ }
            }
        }

        impl FromStr for FeatureId {
            type Err = UnknownFeature;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $( $code => Ok(FeatureId::$variant), )+
                    other => Err(UnknownFeature(other.to_owned())),
                }
            }
        }
    };
}

feature_catalog! {
    AskingQuestions => ("AQ", Text, Some(4926), "Asking questions"),
    GivingQuestions => ("GQ", Text, Some(3616), "Giving questions to students (rhetorical)"),
    Outline => ("O", Text, Some(1211), "Organization: giving class outline"),
    TestSession => ("S", Text, None, "Session on tests"),
    ActiveTeacher => ("AT", Text, Some(835), "Active teacher stands by slides and explains them"),
    SummingUp => ("SU", Text, Some(72), "Summing up"),
    Laughter => ("LA", AudioOnly, Some(315), "Laughter"),
    Intonation => ("IN", AudioOnly, Some(200), "Use intonation to emphasise important issues"),
    MovementAcrossPodium => ("MP", Visual, Some(1379), "Movement across podium"),
    FilmsInSlides => ("FA", Visual, Some(583), "Films or animations in slides"),
    ImagesInSlides => ("IM", Visual, Some(2793), "Images in slides"),
    SlideTestSession => ("ST", Visual, Some(854), "Session on tests"),
    ChartsInSlides => ("CH", Visual, Some(3356), "Charts in slides"),
    Website => ("WS", Visual, Some(307), "Website"),
    WhiteboardWriting => ("WW", Visual, Some(3059), "Writing on a whiteboard"),
    SlideWriting => ("WSL", Visual, Some(6738), "Writing on slides"),
    EyeContact => ("EC", Visual, Some(9943), "Eye contact"),
    Bibliography => ("BIB", Unused, Some(55), "Referring to bibliography, other researchers"),
    Hints => ("HI", Unused, Some(12), "Giving hints how to do something"),
    StudentQuestions => ("SQ", Unused, Some(151), "Students are asking questions"),
    Assignments => ("AS", Unused, Some(55), "Assignments"),
    Demonstration => ("DEM", Unused, Some(278), "Demonstration"),
    Discipline => ("DIS", Unused, Some(105), "Discipline"),
    StudentDiscussion => ("SD", Unused, Some(103), "Students discussion"),
}

impl FeatureId {
    /// Text-task classes in report column order.
    pub const TEXT: [FeatureId; 6] = [
        FeatureId::AskingQuestions,
        FeatureId::GivingQuestions,
        FeatureId::Outline,
        FeatureId::TestSession,
        FeatureId::ActiveTeacher,
        FeatureId::SummingUp,
    ];

    /// Visual classes in label-vector order.
    pub const VISUAL: [FeatureId; 9] = [
        FeatureId::MovementAcrossPodium,
        FeatureId::FilmsInSlides,
        FeatureId::ImagesInSlides,
        FeatureId::SlideTestSession,
        FeatureId::ChartsInSlides,
        FeatureId::Website,
        FeatureId::WhiteboardWriting,
        FeatureId::SlideWriting,
        FeatureId::EyeContact,
    ];

    pub fn text_index(self) -> Option<usize> {
        Self::TEXT.iter().position(|&f| f == self)
    }

    pub fn visual_index(self) -> Option<usize> {
        Self::VISUAL.iter().position(|&f| f == self)
    }

    pub fn is_question(self) -> bool {
        matches!(self, FeatureId::AskingQuestions | FeatureId::GivingQuestions)
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for FeatureId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for FeatureId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    State,
    Point,
}

/// One occurrence of a feature, recorded by one observer in one lecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationEvent {
    pub lecture_id: LectureId,
    pub observer_id: ObserverId,
    pub feature: FeatureId,
    pub kind: EventKind,
    pub span: TimeInterval,
}

/// All events of one observer for one lecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub lecture_id: LectureId,
    pub observer_id: ObserverId,
    pub events: Vec<AnnotationEvent>,
}

/// One ASR speech segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub lecture_id: LectureId,
    pub span: TimeInterval,
    pub text: String,
    pub sentence_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LectureMeta {
    pub lecture_id: LectureId,
    pub series_id: SeriesId,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    LectureMismatch {
        event: usize,
        found: LectureId,
    },
    ObserverMismatch {
        event: usize,
        found: ObserverId,
    },
    NegativeDuration {
        event: usize,
        duration: f64,
    },
    OutOfRange {
        event: usize,
        span: TimeInterval,
        lecture_duration: f64,
    },
    KindDuration {
        event: usize,
        kind: EventKind,
        duration: f64,
    },
    ObservationLecture {
        expected: LectureId,
        found: LectureId,
    },
}

/// Collects every invariant violation of `obs` against `meta`. An empty list
/// means the observation is consistent.
pub fn validate_observation(obs: &Observation, meta: &LectureMeta) -> Vec<Violation> {
    let mut out = Vec::new();
    if obs.lecture_id != meta.lecture_id {
        out.push(Violation::ObservationLecture {
            expected: meta.lecture_id.clone(),
            found: obs.lecture_id.clone(),
        });
    }
    for (i, ev) in obs.events.iter().enumerate() {
        if ev.lecture_id != obs.lecture_id {
            out.push(Violation::LectureMismatch {
                event: i,
                found: ev.lecture_id.clone(),
            });
        }
        if ev.observer_id != obs.observer_id {
            out.push(Violation::ObserverMismatch {
                event: i,
                found: ev.observer_id.clone(),
            });
        }
        let d = ev.span.duration();
        if d < 0.0 {
            out.push(Violation::NegativeDuration {
                event: i,
                duration: d,
            });
        } else {
            let bad_kind = match ev.kind {
                EventKind::Point => d != 0.0,
                EventKind::State => d <= 0.0,
            };
            if bad_kind {
                out.push(Violation::KindDuration {
                    event: i,
                    kind: ev.kind,
                    duration: d,
                });
            }
        }
        if ev.span.start_s < 0.0 || ev.span.end_s > meta.duration_s {
            out.push(Violation::OutOfRange {
                event: i,
                span: ev.span,
                lecture_duration: meta.duration_s,
            });
        }
    }
    out
}
