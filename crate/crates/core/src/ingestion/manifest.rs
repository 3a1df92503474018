use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{parse_annotations, read_annotation_csv, IngestError, TranscriptWarning};
use crate::domain::{LectureId, LectureMeta, Observation, TranscriptEvent};
use crate::par::{self, Execution};

/// Dataset manifest. Relative paths resolve against the manifest's directory.
///
/// ```json
/// {
///   "lectures": [{"lecture_id": "L01", "series_id": "S1", "duration_s": 5400.0}],
///   "annotation_files": ["annotations.csv"],
///   "transcript_files": ["transcripts.jsonl"],
///   "embedding_files": ["frames.lemb"]
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub lectures: Vec<LectureMeta>,
    pub annotation_files: Vec<PathBuf>,
    pub transcript_files: Vec<PathBuf>,
    #[serde(default)]
    pub embedding_files: Vec<PathBuf>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let m: Manifest = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let mut seen = BTreeSet::new();
        for l in &self.lectures {
            if !seen.insert(&l.lecture_id) {
                return Err(IngestError::Manifest(format!(
                    "duplicate lecture id `{}`",
                    l.lecture_id
                )));
            }
            if !(l.duration_s > 0.0) {
                return Err(IngestError::Manifest(format!(
                    "lecture `{}` has non-positive duration",
                    l.lecture_id
                )));
            }
        }
        Ok(())
    }

    pub fn resolve(base: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}

/// Everything a manifest references, parsed and cross-checked.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub lectures: Vec<LectureMeta>,
    pub observations: Vec<Observation>,
    pub transcripts: Vec<TranscriptEvent>,
    pub warnings: Vec<TranscriptWarning>,
    pub embedding_files: Vec<PathBuf>,
}

/// Parses all files named by the manifest (concurrently when enabled) and
/// merges them in canonical order: observations by (lecture, observer),
/// transcripts by (lecture, start).
pub fn load_corpus(manifest_path: &Path, exec: Execution) -> Result<Corpus, IngestError> {
    let manifest = Manifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &PathBuf| Manifest::resolve(base, p);

    let annotation_results = par::map(exec, &manifest.annotation_files, |p| {
        let rows = read_annotation_csv(BufReader::new(File::open(resolve(p))?))?;
        parse_annotations(&rows)
    });
    let mut merged: BTreeMap<(LectureId, crate::domain::ObserverId), Observation> =
        BTreeMap::new();
    for res in annotation_results {
        for obs in res? {
            let key = (obs.lecture_id.clone(), obs.observer_id.clone());
            match merged.get_mut(&key) {
                Some(existing) => existing.events.extend(obs.events),
                None => {
                    merged.insert(key, obs);
                }
            }
        }
    }
    let mut observations: Vec<Observation> = merged.into_values().collect();
    for o in &mut observations {
        super::annotations::sort_events(&mut o.events);
    }

    let transcript_results = par::map(exec, &manifest.transcript_files, |p| {
        super::parse_transcript(BufReader::new(File::open(resolve(p))?))
    });
    let mut transcripts = Vec::new();
    let mut warnings = Vec::new();
    for res in transcript_results {
        let parsed = res?;
        transcripts.extend(parsed.events);
        warnings.extend(parsed.warnings);
    }
    transcripts.sort_by(|a, b| {
        a.lecture_id
            .cmp(&b.lecture_id)
            .then(a.span.start_s.total_cmp(&b.span.start_s))
            .then(a.span.end_s.total_cmp(&b.span.end_s))
    });

    let known: BTreeMap<&LectureId, &LectureMeta> =
        manifest.lectures.iter().map(|l| (&l.lecture_id, l)).collect();
    for o in &observations {
        let meta = known.get(&o.lecture_id).ok_or_else(|| {
            IngestError::Manifest(format!("annotations reference unknown lecture `{}`", o.lecture_id))
        })?;
        let violations = crate::domain::validate_observation(o, meta);
        if let Some(v) = violations.first() {
            return Err(IngestError::Manifest(format!(
                "observation {}/{} invalid: {v:?}",
                o.lecture_id, o.observer_id
            )));
        }
    }
    for t in &transcripts {
        if !known.contains_key(&t.lecture_id) {
            return Err(IngestError::Manifest(format!(
                "transcript references unknown lecture `{}`",
                t.lecture_id
            )));
        }
    }

    Ok(Corpus {
        embedding_files: manifest.embedding_files.iter().map(resolve).collect(),
        lectures: manifest.lectures,
        observations,
        transcripts,
        warnings,
    })
}
