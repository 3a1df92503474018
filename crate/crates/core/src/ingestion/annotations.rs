use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::domain::{
    AnnotationEvent, EventKind, FeatureId, LectureId, Observation, ObserverId, TimeInterval,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Marker {
    Start,
    Stop,
    Point,
}

/// One row of the canonical annotation CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawAnnotationRow {
    pub observer_id: ObserverId,
    pub lecture_id: LectureId,
    pub feature_code: String,
    pub marker: Marker,
    pub time_s: f64,
}

pub fn read_annotation_csv<R: Read>(reader: R) -> Result<Vec<RawAnnotationRow>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

pub fn write_annotation_csv<W: Write>(
    writer: W,
    rows: &[RawAnnotationRow],
) -> Result<(), IngestError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

fn resolve_behavior(name: &str) -> Option<FeatureId> {
    if let Ok(f) = name.parse() {
        return Some(f);
    }
    let lower = name.trim().to_lowercase();
    FeatureId::ALL
        .iter()
        .copied()
        .find(|f| f.description().to_lowercase() == lower)
}

/// Maps a BORIS aggregated export (one row per event, with `Behavior`,
/// `Behavior type`, `Start (s)` and `Stop (s)` columns) onto canonical rows.
/// Behaviors may be named by catalog code or by catalog description.
pub fn read_boris_aggregated<R: Read>(
    reader: R,
    lecture_id: &LectureId,
    observer_id: &ObserverId,
) -> Result<Vec<RawAnnotationRow>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_owned()))
    };
    let (c_beh, c_type, c_start, c_stop) = (
        col("Behavior")?,
        col("Behavior type")?,
        col("Start (s)")?,
        col("Stop (s)")?,
    );
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let name = field(c_beh);
        let feature = resolve_behavior(name).ok_or_else(|| IngestError::UnknownFeature {
            row: i,
            code: name.to_owned(),
        })?;
        let time = |c: usize| -> Result<f64, IngestError> {
            field(c).parse::<f64>().map_err(|_| IngestError::MalformedRecord {
                line: i + 2,
                reason: format!("unparseable time `{}`", field(c)),
            })
        };
        let base = |marker, time_s| RawAnnotationRow {
            observer_id: observer_id.clone(),
            lecture_id: lecture_id.clone(),
            feature_code: feature.code().to_owned(),
            marker,
            time_s,
        };
        match field(c_type).to_uppercase().as_str() {
            "STATE" => {
                rows.push(base(Marker::Start, time(c_start)?));
                rows.push(base(Marker::Stop, time(c_stop)?));
            }
            "POINT" => rows.push(base(Marker::Point, time(c_start)?)),
            other => {
                return Err(IngestError::MalformedRecord {
                    line: i + 2,
                    reason: format!("unknown behavior type `{other}`"),
                })
            }
        }
    }
    Ok(rows)
}

type GroupKey = (LectureId, ObserverId, FeatureId);

/// Pairs START/STOP markers into state events and POINT rows into point events,
/// grouped into one observation per (lecture, observer).
///
/// Rows are stably sorted by time within each (lecture, observer, feature).
/// Overlapping state events of one feature from one observer are merged into
/// their union. Error positions are indices into `rows`; when several rows are
/// faulty the earliest is reported.
pub fn parse_annotations(rows: &[RawAnnotationRow]) -> Result<Vec<Observation>, IngestError> {
    let mut groups: BTreeMap<GroupKey, Vec<(usize, Marker, f64)>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let feature: FeatureId =
            r.feature_code
                .parse()
                .map_err(|_| IngestError::UnknownFeature {
                    row: i,
                    code: r.feature_code.clone(),
                })?;
        if !r.time_s.is_finite() || r.time_s < 0.0 {
            return Err(IngestError::InvalidTime {
                row: i,
                value: r.time_s,
            });
        }
        groups
            .entry((r.lecture_id.clone(), r.observer_id.clone(), feature))
            .or_default()
            .push((i, r.marker, r.time_s));
    }

    let mut errors: Vec<IngestError> = Vec::new();
    let mut per_obs: BTreeMap<(LectureId, ObserverId), Vec<AnnotationEvent>> = BTreeMap::new();
    for ((lecture, observer, feature), mut marks) in groups {
        marks.sort_by(|a, b| a.2.total_cmp(&b.2));
        let events = per_obs
            .entry((lecture.clone(), observer.clone()))
            .or_default();
        let make = |kind, span| AnnotationEvent {
            lecture_id: lecture.clone(),
            observer_id: observer.clone(),
            feature,
            kind,
            span,
        };
        let mut depth = 0usize;
        let mut open: Option<(usize, f64)> = None;
        for &(row, marker, t) in &marks {
            match marker {
                Marker::Point => events.push(make(
                    EventKind::Point,
                    TimeInterval { start_s: t, end_s: t },
                )),
                Marker::Start => {
                    if depth == 0 {
                        open = Some((row, t));
                    }
                    depth += 1;
                }
                Marker::Stop => {
                    if depth == 0 {
                        errors.push(IngestError::UnmatchedStop { row });
                        continue;
                    }
                    depth -= 1;
                    if depth == 0 {
                        let (_, start) = open.take().expect("open start at depth 1");
                        if t <= start {
                            errors.push(IngestError::NegativeDuration {
                                row,
                                start,
                                stop: t,
                            });
                            continue;
                        }
                        events.push(make(
                            EventKind::State,
                            TimeInterval {
                                start_s: start,
                                end_s: t,
                            },
                        ));
                    }
                }
            }
        }
        if let Some((row, _)) = open {
            errors.push(IngestError::UnclosedStart { row });
        }
    }

    if let Some(first) = errors.into_iter().min_by_key(|e| e.position()) {
        return Err(first);
    }

    Ok(per_obs
        .into_iter()
        .map(|((lecture_id, observer_id), mut events)| {
            sort_events(&mut events);
            Observation {
                lecture_id,
                observer_id,
                events,
            }
        })
        .collect())
}

pub(crate) fn sort_events(events: &mut [AnnotationEvent]) {
    events.sort_by(|a, b| {
        a.span
            .start_s
            .total_cmp(&b.span.start_s)
            .then(a.span.end_s.total_cmp(&b.span.end_s))
            .then(a.feature.cmp(&b.feature))
    });
}

/// Inverse of [`parse_annotations`] for observations without overlapping
/// same-feature state events.
pub fn serialize_observations(observations: &[Observation]) -> Vec<RawAnnotationRow> {
    let mut rows = Vec::new();
    for obs in observations {
        for ev in &obs.events {
            let row = |marker, time_s| RawAnnotationRow {
                observer_id: ev.observer_id.clone(),
                lecture_id: ev.lecture_id.clone(),
                feature_code: ev.feature.code().to_owned(),
                marker,
                time_s,
            };
            match ev.kind {
                EventKind::Point => rows.push(row(Marker::Point, ev.span.start_s)),
                EventKind::State => {
                    rows.push(row(Marker::Start, ev.span.start_s));
                    rows.push(row(Marker::Stop, ev.span.end_s));
                }
            }
        }
    }
    rows
}
