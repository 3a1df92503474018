//! Deterministic synthetic lecture corpora with known ground truth.
//!
//! Each transcript event draws its text-feature label set independently from
//! the configured prevalences; planted rules then shape its text so the labels
//! are recoverable from words alone. Annotations are laid so that every state
//! event covers exactly a maximal run of consecutive transcript events
//! carrying its feature, and every point event sits at the midpoint of the
//! event that generated it.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::annotations::sort_events;
use super::count_sentences;
use crate::domain::{
    AnnotationEvent, EventKind, FeatureId, LectureId, LectureMeta, Observation, ObserverId,
    SeriesId, TimeInterval, TranscriptEvent,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantedRule {
    /// The event's last sentence ends with a question mark; events without
    /// any question-rule feature contain no question mark at all.
    QuestionMark,
    /// The keyword is inserted into one sentence of every positive event.
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_lectures: usize,
    pub events_per_lecture: usize,
    pub observers_per_lecture: usize,
    /// Observer teams; lecture `i` is annotated by team `i % n_teams`.
    pub n_teams: usize,
    pub lectures_per_series: usize,
    pub feature_prevalences: BTreeMap<FeatureId, f64>,
    pub planted_rules: BTreeMap<FeatureId, PlantedRule>,
    /// Text features annotated as point events instead of state events.
    pub point_features: BTreeSet<FeatureId>,
    /// Probability that a non-primary team member also records an event.
    pub observer_recall: f64,
    /// Visual state events per lecture, drawn by visual prevalence.
    pub visual_events_per_lecture: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        use FeatureId::*;
        let feature_prevalences = [
            (AskingQuestions, 0.10),
            (GivingQuestions, 0.06),
            (Outline, 0.04),
            (TestSession, 0.08),
            (ActiveTeacher, 0.50),
            (SummingUp, 0.02),
            (MovementAcrossPodium, 0.08),
            (FilmsInSlides, 0.04),
            (ImagesInSlides, 0.14),
            (SlideTestSession, 0.05),
            (ChartsInSlides, 0.16),
            (Website, 0.03),
            (WhiteboardWriting, 0.12),
            (SlideWriting, 0.18),
            (EyeContact, 0.20),
        ]
        .into_iter()
        .collect();
        let planted_rules = [
            (AskingQuestions, PlantedRule::QuestionMark),
            (GivingQuestions, PlantedRule::QuestionMark),
            (Outline, PlantedRule::Keyword("outline".into())),
            (TestSession, PlantedRule::Keyword("quiz".into())),
            (ActiveTeacher, PlantedRule::Keyword("slide".into())),
            (SummingUp, PlantedRule::Keyword("summary".into())),
        ]
        .into_iter()
        .collect();
        Self {
            seed: 0,
            n_lectures: 40,
            events_per_lecture: 250,
            observers_per_lecture: 3,
            n_teams: 10,
            lectures_per_series: 4,
            feature_prevalences,
            planted_rules,
            point_features: [SummingUp].into_iter().collect(),
            observer_recall: 0.8,
            visual_events_per_lecture: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_lectures == 0 || self.events_per_lecture == 0 {
            return Err("corpus must have at least one lecture and one event".into());
        }
        if self.observers_per_lecture == 0 || self.n_teams == 0 || self.lectures_per_series == 0 {
            return Err("observer, team and series counts must be positive".into());
        }
        if let Some((f, p)) = self
            .feature_prevalences
            .iter()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(format!("prevalence of {f} out of [0,1]: {p}"));
        }
        if !(0.0..=1.0).contains(&self.observer_recall) {
            return Err("observer_recall out of [0,1]".into());
        }
        Ok(())
    }

    pub fn prevalence(&self, f: FeatureId) -> f64 {
        self.feature_prevalences.get(&f).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpus {
    pub lectures: Vec<LectureMeta>,
    pub observations: Vec<Observation>,
    pub transcripts: Vec<TranscriptEvent>,
    /// Planted text-feature labels, aligned with `transcripts`.
    pub truth: Vec<BTreeSet<FeatureId>>,
}

const FILLER: &[&str] = &[
    "the", "we", "now", "value", "function", "here", "so", "this", "is", "a", "point", "then",
    "compute", "derivative", "limit", "equal", "to", "domain", "number", "positive", "inner",
    "square", "root", "of", "and", "it", "will", "be", "bigger", "than", "careful", "basically",
    "just", "go", "further", "let", "us", "look", "at", "case", "when", "x", "two", "minus",
    "plus", "matrix", "vector", "graph", "example", "theorem", "proof", "okay", "right", "cool",
    "real", "all", "defined", "not", "for", "with", "result", "method", "data", "model",
];

fn ms(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn observer_id(team: usize, member: usize, per_team: usize) -> ObserverId {
    ObserverId::new(format!("obs{:03}", team * per_team + member))
}

/// Team members who record one event: a random primary always, the others
/// with probability `recall`.
fn recorders(rng: &mut ChaCha8Rng, team: &[ObserverId], recall: f64) -> Vec<ObserverId> {
    let primary = rng.random_range(0..team.len());
    team.iter()
        .enumerate()
        .filter(|(i, _)| *i == primary || rng.random_bool(recall))
        .map(|(_, o)| o.clone())
        .collect()
}

fn sentence(rng: &mut ChaCha8Rng) -> Vec<String> {
    let n = rng.random_range(4..=10);
    (0..n)
        .map(|_| FILLER[rng.random_range(0..FILLER.len())].to_owned())
        .collect()
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<SynthCorpus, String> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut lectures = Vec::new();
    let mut transcripts = Vec::new();
    let mut truth = Vec::new();
    let mut per_obs: BTreeMap<(LectureId, ObserverId), Vec<AnnotationEvent>> = BTreeMap::new();

    let visual_weights: Vec<f64> = FeatureId::VISUAL
        .iter()
        .map(|&f| config.prevalence(f))
        .collect();
    let visual_dist = if config.visual_events_per_lecture > 0 {
        WeightedIndex::new(&visual_weights).ok()
    } else {
        None
    };

    for li in 0..config.n_lectures {
        let lecture_id = LectureId::new(format!("L{li:03}"));
        let team_idx = li % config.n_teams;
        let team: Vec<ObserverId> = (0..config.observers_per_lecture)
            .map(|m| observer_id(team_idx, m, config.observers_per_lecture))
            .collect();
        for o in &team {
            per_obs.entry((lecture_id.clone(), o.clone())).or_default();
        }

        let mut t = 2.0;
        let first = transcripts.len();
        for _ in 0..config.events_per_lecture {
            let start = ms(t);
            let end = ms(start + rng.random_range(3.0..11.0));
            t = end + rng.random_range(0.5..2.5);

            let labels: BTreeSet<FeatureId> = FeatureId::TEXT
                .iter()
                .copied()
                .filter(|&f| {
                    let p = config.prevalence(f);
                    p > 0.0 && rng.random_bool(p)
                })
                .collect();

            let n_sent = rng.random_range(1..=4);
            let mut sentences: Vec<Vec<String>> = (0..n_sent).map(|_| sentence(&mut rng)).collect();
            let mut question = false;
            for f in &labels {
                match config.planted_rules.get(f) {
                    Some(PlantedRule::QuestionMark) => question = true,
                    Some(PlantedRule::Keyword(k)) => {
                        let s = rng.random_range(0..sentences.len());
                        let pos = rng.random_range(0..=sentences[s].len());
                        sentences[s].insert(pos, k.clone());
                    }
                    None => {}
                }
            }
            let last = sentences.len() - 1;
            let text = sentences
                .iter()
                .enumerate()
                .map(|(i, words)| {
                    let end = if question && i == last { "?" } else { "." };
                    format!("{}{end}", words.join(" "))
                })
                .collect::<Vec<_>>()
                .join(" ");
            transcripts.push(TranscriptEvent {
                lecture_id: lecture_id.clone(),
                span: TimeInterval {
                    start_s: start,
                    end_s: end,
                },
                sentence_count: count_sentences(&text),
                text,
            });
            truth.push(labels);
        }
        let duration = ms(t + 5.0);
        let lecture_events = &transcripts[first..];
        let lecture_truth = &truth[first..];

        for &f in &FeatureId::TEXT {
            let point = config.point_features.contains(&f);
            let mut i = 0;
            while i < lecture_events.len() {
                if !lecture_truth[i].contains(&f) {
                    i += 1;
                    continue;
                }
                let (kind, span) = if point {
                    let m = ms(lecture_events[i].span.midpoint());
                    i += 1;
                    (EventKind::Point, TimeInterval { start_s: m, end_s: m })
                } else {
                    let run_start = i;
                    while i < lecture_events.len() && lecture_truth[i].contains(&f) {
                        i += 1;
                    }
                    (
                        EventKind::State,
                        TimeInterval {
                            start_s: lecture_events[run_start].span.start_s,
                            end_s: lecture_events[i - 1].span.end_s,
                        },
                    )
                };
                for o in recorders(&mut rng, &team, config.observer_recall) {
                    per_obs
                        .get_mut(&(lecture_id.clone(), o.clone()))
                        .expect("team observation")
                        .push(AnnotationEvent {
                            lecture_id: lecture_id.clone(),
                            observer_id: o,
                            feature: f,
                            kind,
                            span,
                        });
                }
            }
        }

        if let Some(dist) = &visual_dist {
            for _ in 0..config.visual_events_per_lecture {
                let f = FeatureId::VISUAL[dist.sample(&mut rng)];
                let d = ms(rng.random_range(4.0..30.0));
                let start = ms(rng.random_range(0.0..(duration - d).max(0.001)));
                let span = TimeInterval {
                    start_s: start,
                    end_s: ms(start + d).min(duration),
                };
                for o in recorders(&mut rng, &team, config.observer_recall) {
                    per_obs
                        .get_mut(&(lecture_id.clone(), o.clone()))
                        .expect("team observation")
                        .push(AnnotationEvent {
                            lecture_id: lecture_id.clone(),
                            observer_id: o,
                            feature: f,
                            kind: EventKind::State,
                            span,
                        });
                }
            }
        }

        lectures.push(LectureMeta {
            lecture_id,
            series_id: SeriesId::new(format!("S{:02}", li / config.lectures_per_series)),
            duration_s: duration,
        });
    }

    let observations = per_obs
        .into_iter()
        .filter(|(_, evs)| !evs.is_empty())
        .map(|((lecture_id, observer_id), mut events)| {
            merge_overlapping_states(&mut events);
            Observation {
                lecture_id,
                observer_id,
                events,
            }
        })
        .collect();

    Ok(SynthCorpus {
        lectures,
        observations,
        transcripts,
        truth,
    })
}

/// Replaces overlapping same-feature state events with their union and sorts
/// the result canonically, matching what the CSV parser produces.
fn merge_overlapping_states(events: &mut Vec<AnnotationEvent>) {
    sort_events(events);
    let mut by_feature: BTreeMap<FeatureId, Vec<AnnotationEvent>> = BTreeMap::new();
    let mut out = Vec::with_capacity(events.len());
    for ev in events.drain(..) {
        if ev.kind == EventKind::Point {
            out.push(ev);
        } else {
            by_feature.entry(ev.feature).or_default().push(ev);
        }
    }
    for (_, evs) in by_feature {
        let mut cur: Option<AnnotationEvent> = None;
        for ev in evs {
            match &mut cur {
                Some(c) if ev.span.start_s < c.span.end_s => {
                    c.span.end_s = c.span.end_s.max(ev.span.end_s);
                }
                _ => {
                    if let Some(c) = cur.replace(ev) {
                        out.push(c);
                    }
                }
            }
        }
        out.extend(cur);
    }
    sort_events(&mut out);
    *events = out;
}
