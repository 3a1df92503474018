//! Multi-view frame classifier: per-view embeddings from files, a shared
//! encoder, max-pool fusion and a nine-class multi-label head.

mod lemb;
mod model;
pub mod synthetic;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::labeling::VISUAL_CLASSES;
pub use lemb::{read_lemb, write_lemb, EmbeddingHeader, EmbeddingRecord, LembError, ViewId};
pub use model::{mtl_forward, MtlArchitecture, MtlModel};
pub use synthetic::{planted_embeddings, synthetic_frames, PlantedConcepts, SyntheticFrameConfig};

use crate::domain::{FeatureId, LectureId, LectureMeta, SeriesId};
use crate::evaluation::{balanced_accuracy, per_class_counts, ConfusionCounts};
use crate::labeling::FrameSampleSpec;
use crate::nncore::{self, Checkpoint, CheckpointError, EpochRecord, LossVariant, NetError, TrainConfig};
use crate::par;
use crate::splitting::{Split, SplitManifest};

#[derive(Debug, Error)]
pub enum MtlError {
    #[error(transparent)]
    Lemb(#[from] LembError),
    #[error("frame {frame_id} has no {view:?} embedding")]
    MissingView { frame_id: String, view: ViewId },
    #[error("frame {0} has more than one embedding for a view")]
    DuplicateView(String),
    #[error("embedding dimension {found} differs from {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("lecture {0} is not in the manifest")]
    UnknownLecture(LectureId),
    #[error("series {0} has no split assignment")]
    Unassigned(SeriesId),
    #[error("{0} split has no frames")]
    EmptySplit(&'static str),
    #[error("at least {needed} repeats are required, got {found}")]
    TooFewRepeats { needed: usize, found: usize },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

pub const MIN_REPEATS: usize = 5;

/// One sampled frame with both view embeddings and its label vector in
/// [`FeatureId::VISUAL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: String,
    pub lecture_id: LectureId,
    pub series_id: SeriesId,
    pub time_s: f64,
    pub camera: Vec<f64>,
    pub screen: Vec<f64>,
    pub labels: [bool; VISUAL_CLASSES],
}

impl FrameRecord {
    pub fn target(&self) -> Vec<f64> {
        self.labels.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

/// Joins frame specs with their two embeddings and lecture series.
pub fn assemble_frames(
    specs: &[FrameSampleSpec],
    metas: &[LectureMeta],
    embeddings: &[EmbeddingRecord],
) -> Result<Vec<FrameRecord>, MtlError> {
    let series: BTreeMap<&LectureId, &SeriesId> = metas.iter().map(|m| (&m.lecture_id, &m.series_id)).collect();
    let mut views: BTreeMap<&str, [Option<&[f32]>; 2]> = BTreeMap::new();
    let dim = embeddings.first().map_or(0, |e| e.vector.len());
    for e in embeddings {
        if e.vector.len() != dim {
            return Err(MtlError::Dimension {
                expected: dim,
                found: e.vector.len(),
            });
        }
        let slot = &mut views.entry(e.frame_id.as_str()).or_default()[e.view as usize];
        if slot.is_some() {
            return Err(MtlError::DuplicateView(e.frame_id.clone()));
        }
        *slot = Some(&e.vector);
    }
    specs
        .iter()
        .map(|s| {
            let v = views.get(s.frame_id.as_str()).copied().unwrap_or_default();
            let get = |view: ViewId| {
                v[view as usize]
                    .map(|x| x.iter().map(|&f| f as f64).collect::<Vec<f64>>())
                    .ok_or_else(|| MtlError::MissingView {
                        frame_id: s.frame_id.clone(),
                        view,
                    })
            };
            Ok(FrameRecord {
                frame_id: s.frame_id.clone(),
                series_id: (*series
                    .get(&s.lecture_id)
                    .ok_or_else(|| MtlError::UnknownLecture(s.lecture_id.clone()))?)
                .clone(),
                lecture_id: s.lecture_id.clone(),
                time_s: s.time_s,
                camera: get(ViewId::Camera)?,
                screen: get(ViewId::Screen)?,
                labels: s.labels,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtlConfig {
    pub architecture: MtlArchitecture,
    /// `repeats` must be at least [`MIN_REPEATS`]; repeat `r` uses seed `seed + r`.
    pub train: TrainConfig,
    pub loss: LossVariant,
}

impl Default for MtlConfig {
    fn default() -> Self {
        Self {
            architecture: MtlArchitecture::default(),
            train: TrainConfig {
                learning_rate: 0.05,
                max_epochs: 30,
                early_stop_patience: 5,
                repeats: MIN_REPEATS,
                ..TrainConfig::default()
            },
            loss: LossVariant::Weighted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some(Self {
            mean,
            std: var.sqrt(),
            n: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub counts: ConfusionCounts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatMetrics {
    pub seed: u64,
    /// Fraction of correct (frame, class) decisions on test.
    pub accuracy: f64,
    pub balanced_accuracy: Option<f64>,
    pub per_class: Vec<ClassMetrics>,
    pub best_epoch: usize,
    pub epochs: Vec<EpochRecord>,
    /// Whether swapping the views left every test score unchanged.
    pub view_order_invariant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: String,
    pub precision: Option<MeanStd>,
    pub recall: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtlSummary {
    pub accuracy: MeanStd,
    pub balanced_accuracy: Option<MeanStd>,
    pub per_class: Vec<ClassSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtlRun {
    pub models: Vec<MtlModel>,
    pub repeats: Vec<RepeatMetrics>,
    pub summary: MtlSummary,
}

pub fn class_names() -> Vec<String> {
    FeatureId::VISUAL.iter().map(|f| f.code().to_owned()).collect()
}

fn decisions(model: &MtlModel, records: &[FrameRecord]) -> Result<Vec<[bool; VISUAL_CLASSES]>, NetError> {
    records
        .iter()
        .map(|r| {
            let s = model.forward(r)?;
            let mut d = [false; VISUAL_CLASSES];
            for (o, p) in d.iter_mut().zip(&s) {
                *o = *p > 0.5;
            }
            Ok(d)
        })
        .collect()
}

/// Per-class counts of a model on `records` at threshold 0.5.
pub fn evaluate_model(model: &MtlModel, records: &[FrameRecord]) -> Result<Vec<ConfusionCounts>, MtlError> {
    let pred = decisions(model, records)?;
    let truth: Vec<[bool; VISUAL_CLASSES]> = records.iter().map(|r| r.labels).collect();
    Ok(per_class_counts(&pred, &truth).expect("shapes agree"))
}

fn split_records<'a>(
    records: &'a [FrameRecord],
    manifest: &SplitManifest,
) -> Result<[Vec<FrameRecord>; 3], MtlError> {
    let mut out: [Vec<FrameRecord>; 3] = Default::default();
    for r in records {
        let s = manifest
            .split_of(r.series_id.as_str())
            .ok_or_else(|| MtlError::Unassigned(r.series_id.clone()))?;
        out[s.index()].push(r.clone());
    }
    for s in Split::ALL {
        if out[s.index()].is_empty() {
            return Err(MtlError::EmptySplit(s.name()));
        }
    }
    Ok(out)
}

/// Trains one model per repeat on the series-grouped splits and reports
/// test metrics per repeat and as mean and standard deviation.
pub fn train_mtl(records: &[FrameRecord], manifest: &SplitManifest, config: &MtlConfig) -> Result<MtlRun, MtlError> {
    if config.train.repeats < MIN_REPEATS {
        return Err(MtlError::TooFewRepeats {
            needed: MIN_REPEATS,
            found: config.train.repeats,
        });
    }
    let dim = records.first().map_or(0, |r| r.camera.len());
    for r in records {
        for v in [&r.camera, &r.screen] {
            if v.len() != dim {
                return Err(MtlError::Dimension {
                    expected: dim,
                    found: v.len(),
                });
            }
        }
    }
    let [train, dev, test] = split_records(records, manifest)?;
    let targets: Vec<Vec<f64>> = train.iter().map(|r| r.target()).collect();
    let loss = config.loss.bce_spec(targets.iter().map(|t| t.as_slice()));
    let names = class_names();

    let runs = par::map_range(config.train.execution, config.train.repeats, |r| -> Result<_, MtlError> {
        let seed = config.train.seed.wrapping_add(r as u64);
        let model = MtlModel::new(dim, &config.architecture, seed)?;
        let tc = TrainConfig {
            seed,
            ..config.train.clone()
        };
        let (model, history) = nncore::train(model, &train, &dev, &loss, &tc, |m, d| {
            evaluate_model(m, d)
                .ok()
                .and_then(|c| balanced_accuracy(&c).ok())
                .map_or(0.0, |b| b.value)
        })?;
        let counts = evaluate_model(&model, &test)?;
        let mut total = ConfusionCounts::default();
        counts.iter().for_each(|c| total += *c);
        let mut invariant = true;
        for t in &test {
            if model.forward_views(&t.camera, &t.screen)? != model.forward_views(&t.screen, &t.camera)? {
                invariant = false;
            }
        }
        let metrics = RepeatMetrics {
            seed,
            accuracy: total.accuracy().unwrap_or(0.0),
            balanced_accuracy: balanced_accuracy(&counts).ok().map(|b| b.value),
            per_class: names
                .iter()
                .zip(&counts)
                .map(|(n, c)| ClassMetrics {
                    class: n.clone(),
                    counts: *c,
                    precision: c.precision(),
                    recall: c.recall(),
                })
                .collect(),
            best_epoch: history.best_epoch,
            epochs: history.epochs,
            view_order_invariant: invariant,
        };
        Ok((model, metrics))
    });
    let mut models = Vec::new();
    let mut repeats = Vec::new();
    for run in runs {
        let (m, r) = run?;
        models.push(m);
        repeats.push(r);
    }
    let summary = summarize(&repeats);
    Ok(MtlRun {
        models,
        repeats,
        summary,
    })
}

fn summarize(repeats: &[RepeatMetrics]) -> MtlSummary {
    let acc: Vec<f64> = repeats.iter().map(|r| r.accuracy).collect();
    let bal: Vec<f64> = repeats.iter().filter_map(|r| r.balanced_accuracy).collect();
    let per_class = (0..VISUAL_CLASSES)
        .map(|c| {
            let p: Vec<f64> = repeats.iter().filter_map(|r| r.per_class[c].precision).collect();
            let rc: Vec<f64> = repeats.iter().filter_map(|r| r.per_class[c].recall).collect();
            ClassSummary {
                class: FeatureId::VISUAL[c].code().to_owned(),
                precision: MeanStd::of(&p),
                recall: MeanStd::of(&rc),
            }
        })
        .collect();
    MtlSummary {
        accuracy: MeanStd::of(&acc).unwrap_or(MeanStd { mean: 0.0, std: 0.0, n: 0 }),
        balanced_accuracy: MeanStd::of(&bal),
        per_class,
    }
}

/// `M[i][j]` counts frames where class `i` is a missed positive while class
/// `j` is a false positive, summed over models.
pub fn confusion_pairs(
    models: &[MtlModel],
    records: &[FrameRecord],
) -> Result<[[u64; VISUAL_CLASSES]; VISUAL_CLASSES], MtlError> {
    let mut m = [[0u64; VISUAL_CLASSES]; VISUAL_CLASSES];
    for model in models {
        for (r, p) in records.iter().zip(decisions(model, records)?) {
            accumulate_pairs(&mut m, &r.labels, &p);
        }
    }
    Ok(m)
}

pub fn accumulate_pairs(
    m: &mut [[u64; VISUAL_CLASSES]; VISUAL_CLASSES],
    truth: &[bool; VISUAL_CLASSES],
    pred: &[bool; VISUAL_CLASSES],
) {
    for i in 0..VISUAL_CLASSES {
        if truth[i] && !pred[i] {
            for j in 0..VISUAL_CLASSES {
                if pred[j] && !truth[j] {
                    m[i][j] += 1;
                }
            }
        }
    }
}

impl MtlModel {
    pub fn to_checkpoint(&self) -> Result<Checkpoint, MtlError> {
        let mut ck = Checkpoint::new();
        ck.put_net("encoder", &self.encoder)?;
        ck.put_net("classifier", &self.classifier)?;
        Ok(ck)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, MtlError> {
        Ok(Self::from_parts(ck.net("encoder")?, ck.net("classifier")?)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), MtlError> {
        Ok(self.to_checkpoint()?.save(path)?)
    }

    pub fn load(path: &Path) -> Result<Self, MtlError> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TimeInterval;
    use crate::splitting::{split_groups, GroupBy, DEFAULT_RATIOS};

    fn small_config(loss: LossVariant) -> MtlConfig {
        MtlConfig {
            architecture: MtlArchitecture {
                encoder_dims: vec![32, 32, 32],
                classifier_hidden: 16,
            },
            train: TrainConfig {
                learning_rate: 0.05,
                max_epochs: 15,
                early_stop_patience: 4,
                repeats: 5,
                seed: 3,
                ..TrainConfig::default()
            },
            loss,
        }
    }

    fn manifest_for(records: &[FrameRecord], seed: u64) -> SplitManifest {
        let mut sizes: BTreeMap<String, usize> = BTreeMap::new();
        for r in records {
            *sizes.entry(r.series_id.as_str().to_owned()).or_default() += 1;
        }
        split_groups(&sizes, GroupBy::Series, DEFAULT_RATIOS, seed).unwrap()
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((m.mean, m.std, m.n), (2.0, 1.0, 3));
        assert!(MeanStd::of(&[]).is_none());
    }

    #[test]
    fn confusion_pair_examples() {
        let mut m = [[0u64; 9]; 9];
        let t = [true, false, false, false, false, false, false, false, true];
        accumulate_pairs(&mut m, &t, &t);
        assert!(m.iter().flatten().all(|&x| x == 0));
        // IM and CH never co-occur; the predictor swaps them
        let (im, ch) = (2, 4);
        for k in 0..10 {
            let mut truth = [false; 9];
            truth[if k % 2 == 0 { im } else { ch }] = true;
            let mut pred = [false; 9];
            pred[if k % 2 == 0 { ch } else { im }] = true;
            accumulate_pairs(&mut m, &truth, &pred);
        }
        assert_eq!(m[im][ch], 5);
        assert_eq!(m[ch][im], 5);
        assert_eq!(m.iter().flatten().sum::<u64>(), 10);
    }

    #[test]
    fn assemble_joins_views() {
        let lecture = LectureId::new("L000");
        let spec = FrameSampleSpec {
            frame_id: "L000@15.000".into(),
            lecture_id: lecture.clone(),
            time_s: 15.0,
            source_feature: FeatureId::EyeContact,
            source_span: TimeInterval::new(10.0, 20.0).unwrap(),
            labels: [false, false, false, false, false, false, false, false, true],
        };
        let metas = vec![LectureMeta {
            lecture_id: lecture,
            series_id: SeriesId::new("S00"),
            duration_s: 100.0,
        }];
        let rec = |view, v: f32| EmbeddingRecord { frame_id: "L000@15.000".into(), view, vector: vec![v, v] };
        let frames = assemble_frames(&[spec.clone()], &metas, &[rec(ViewId::Screen, 2.0), rec(ViewId::Camera, 1.0)]).unwrap();
        assert_eq!(frames[0].camera, vec![1.0, 1.0]);
        assert_eq!(frames[0].screen, vec![2.0, 2.0]);
        assert_eq!(frames[0].series_id.as_str(), "S00");
        assert!(matches!(
            assemble_frames(&[spec.clone()], &metas, &[rec(ViewId::Camera, 1.0)]),
            Err(MtlError::MissingView { view: ViewId::Screen, .. })
        ));
        assert!(matches!(
            assemble_frames(&[spec], &metas, &[rec(ViewId::Camera, 1.0), rec(ViewId::Camera, 1.0)]),
            Err(MtlError::DuplicateView(_))
        ));
    }

    #[test]
    fn repeats_are_required_and_reproducible() {
        let records = synthetic_frames(&SyntheticFrameConfig {
            n_frames: 600,
            dim: 16,
            ..SyntheticFrameConfig::default()
        });
        let manifest = manifest_for(&records, 1);
        let mut cfg = small_config(LossVariant::Weighted);
        cfg.train.max_epochs = 3;
        cfg.train.repeats = 4;
        assert!(matches!(train_mtl(&records, &manifest, &cfg), Err(MtlError::TooFewRepeats { .. })));
        cfg.train.repeats = 5;
        let a = train_mtl(&records, &manifest, &cfg).unwrap();
        let b = train_mtl(&records, &manifest, &cfg).unwrap();
        assert_eq!(a.models, b.models);
        assert_eq!(a.repeats, b.repeats);
        assert_eq!(a.models.len(), 5);
        assert_ne!(a.models[0], a.models[1]);
        assert!(a.repeats.iter().all(|r| r.view_order_invariant));
    }

    #[test]
    fn planted_concepts_are_learned() {
        let records = synthetic_frames(&SyntheticFrameConfig {
            n_frames: 2000,
            dim: 32,
            seed: 4,
            ..SyntheticFrameConfig::default()
        });
        let manifest = manifest_for(&records, 2);
        let run = train_mtl(&records, &manifest, &small_config(LossVariant::Weighted)).unwrap();
        let b = run.summary.balanced_accuracy.unwrap().mean;
        assert!(b >= 0.85, "balanced accuracy {b}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = MtlModel::new(8, &small_config(LossVariant::Plain).architecture, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mtl.ck");
        m.save(&p).unwrap();
        let back = MtlModel::load(&p).unwrap();
        let x = vec![0.3; 8];
        let (a, b) = (m.forward_views(&x, &x).unwrap(), back.forward_views(&x, &x).unwrap());
        assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-5));
    }
}
