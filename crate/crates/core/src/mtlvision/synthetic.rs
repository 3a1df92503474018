//! Two-view embeddings with planted linearly separable concepts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::lemb::{EmbeddingHeader, EmbeddingRecord, ViewId};
use super::{FrameRecord, VISUAL_CLASSES};
use crate::domain::{FeatureId, LectureId, SeriesId};
use crate::labeling::{frame_id, FrameSampleSpec};

/// View in which each visual class is visible.
pub fn concept_view(class: usize) -> ViewId {
    match FeatureId::VISUAL[class] {
        FeatureId::MovementAcrossPodium | FeatureId::WhiteboardWriting | FeatureId::EyeContact => ViewId::Camera,
        _ => ViewId::Screen,
    }
}

/// One random unit direction per class in its view; a positive class adds
/// `amplitude` along its direction on top of isotropic Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConcepts {
    pub dim: usize,
    pub directions: Vec<Vec<f64>>,
    pub amplitude: [f64; VISUAL_CLASSES],
    pub noise: f64,
}

impl PlantedConcepts {
    pub fn new(dim: usize, amplitude: [f64; VISUAL_CLASSES], noise: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let directions = (0..VISUAL_CLASSES)
            .map(|_| {
                let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / n).collect()
            })
            .collect();
        Self {
            dim,
            directions,
            amplitude,
            noise,
        }
    }

    /// Camera and screen vectors for one frame.
    pub fn embed<R: Rng>(&self, labels: &[bool; VISUAL_CLASSES], rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let normal = Normal::new(0.0, self.noise.max(0.0)).expect("finite noise");
        let mut cam: Vec<f64> = (0..self.dim).map(|_| normal.sample(rng)).collect();
        let mut scr: Vec<f64> = (0..self.dim).map(|_| normal.sample(rng)).collect();
        for c in 0..VISUAL_CLASSES {
            if labels[c] {
                let v = match concept_view(c) {
                    ViewId::Camera => &mut cam,
                    ViewId::Screen => &mut scr,
                };
                for (x, d) in v.iter_mut().zip(&self.directions[c]) {
                    *x += self.amplitude[c] * d;
                }
            }
        }
        (cam, scr)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFrameConfig {
    pub seed: u64,
    pub n_frames: usize,
    pub dim: usize,
    pub n_lectures: usize,
    pub lectures_per_series: usize,
    pub prevalence: [f64; VISUAL_CLASSES],
    pub amplitude: [f64; VISUAL_CLASSES],
    pub noise: f64,
}

impl Default for SyntheticFrameConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_frames: 5000,
            dim: 64,
            n_lectures: 80,
            lectures_per_series: 4,
            prevalence: [0.08, 0.04, 0.14, 0.05, 0.16, 0.03, 0.12, 0.18, 0.20],
            amplitude: [3.0; VISUAL_CLASSES],
            noise: 0.5,
        }
    }
}

/// Frames spread round-robin over lectures, labels drawn independently per
/// class by prevalence.
pub fn synthetic_frames(config: &SyntheticFrameConfig) -> Vec<FrameRecord> {
    let concepts = PlantedConcepts::new(config.dim, config.amplitude, config.noise, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let n_lectures = config.n_lectures.max(1);
    (0..config.n_frames)
        .map(|i| {
            let li = i % n_lectures;
            let lecture = LectureId::new(format!("L{li:03}"));
            let time_s = (i / n_lectures) as f64 * 10.0 + 5.0;
            let mut labels = [false; VISUAL_CLASSES];
            for (l, p) in labels.iter_mut().zip(&config.prevalence) {
                *l = rng.random_bool(p.clamp(0.0, 1.0));
            }
            let (camera, screen) = concepts.embed(&labels, &mut rng);
            FrameRecord {
                frame_id: frame_id(&lecture, time_s),
                series_id: SeriesId::new(format!("S{:02}", li / config.lectures_per_series.max(1))),
                lecture_id: lecture,
                time_s,
                camera,
                screen,
                labels,
            }
        })
        .collect()
}

/// Embedding records for already selected frames, two per frame, using the
/// frames' label vectors.
pub fn planted_embeddings(
    specs: &[FrameSampleSpec],
    concepts: &PlantedConcepts,
    seed: u64,
) -> (EmbeddingHeader, Vec<EmbeddingRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * specs.len());
    for s in specs {
        let (cam, scr) = concepts.embed(&s.labels, &mut rng);
        for (view, v) in [(ViewId::Camera, cam), (ViewId::Screen, scr)] {
            out.push(EmbeddingRecord {
                frame_id: s.frame_id.clone(),
                view,
                vector: v.into_iter().map(|x| x as f32).collect(),
            });
        }
    }
    let header = EmbeddingHeader {
        backbone: "synthetic".into(),
        tap: "planted".into(),
        dim: concepts.dim,
        extra: [("seed".to_owned(), serde_json::json!(seed))].into(),
    };
    (header, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit() {
        let c = PlantedConcepts::new(64, [3.0; 9], 0.5, 1);
        for d in &c.directions {
            assert!((d.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn concept_projection_separates() {
        let c = PlantedConcepts::new(64, [3.0; 9], 0.5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut on = [false; 9];
        on[0] = true;
        let proj = |v: &[f64]| v.iter().zip(&c.directions[0]).map(|(a, b)| a * b).sum::<f64>();
        let (pos, _) = c.embed(&on, &mut rng);
        let (neg, _) = c.embed(&[false; 9], &mut rng);
        assert!(proj(&pos) > proj(&neg));
        assert_eq!(concept_view(0), ViewId::Camera);
        assert_eq!(concept_view(2), ViewId::Screen);
    }

    #[test]
    fn frames_deterministic_and_shaped() {
        let cfg = SyntheticFrameConfig { n_frames: 100, ..SyntheticFrameConfig::default() };
        let a = synthetic_frames(&cfg);
        assert_eq!(a, synthetic_frames(&cfg));
        assert_eq!(a.len(), 100);
        assert!(a.iter().all(|f| f.camera.len() == 64 && f.screen.len() == 64));
        assert_eq!(a[0].series_id.as_str(), "S00");
        assert_eq!(a[79].series_id.as_str(), "S19");
    }
}
