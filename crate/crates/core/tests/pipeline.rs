use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};

use didactic_core::ingestion::{generate_synthetic, SynthConfig};
use didactic_core::labeling::{label_transcripts_with, LabelPolicy};
use didactic_core::mtlvision::{
    read_lemb, synthetic_frames, train_mtl, write_lemb, EmbeddingHeader, EmbeddingRecord, MtlArchitecture,
    MtlConfig, SyntheticFrameConfig, ViewId,
};
use didactic_core::nncore::{LossVariant, TrainConfig};
use didactic_core::splitting::{split, GroupBy, DEFAULT_RATIOS};
use didactic_core::textmodels::{train_text_model, ModelKind, TaskSpec, TextConfig};
use didactic_core::Execution;

fn small_corpus() -> didactic_core::ingestion::SynthCorpus {
    generate_synthetic(&SynthConfig {
        seed: 3,
        n_lectures: 10,
        events_per_lecture: 80,
        ..SynthConfig::default()
    })
    .unwrap()
}

#[test]
fn labeling_and_text_training_agree_across_execution_modes() {
    let corpus = small_corpus();
    let run = |exec| {
        let samples = label_transcripts_with(exec, &corpus.transcripts, &corpus.observations, LabelPolicy::Majority).unwrap();
        let (train, rest) = samples.split_at(samples.len() * 7 / 10);
        let (dev, test) = rest.split_at(rest.len() / 2);
        let cfg = TextConfig {
            execution: exec,
            ..TextConfig::default()
        };
        let m = train_text_model(ModelKind::Tfidf, TaskSpec::questions_only(), train, dev, &cfg).unwrap();
        (samples.clone(), m.evaluate(test, exec).unwrap())
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}

#[test]
fn mtl_training_agrees_across_execution_modes() {
    let frames = synthetic_frames(&SyntheticFrameConfig {
        n_frames: 600,
        dim: 12,
        seed: 5,
        ..SyntheticFrameConfig::default()
    });
    let manifest = split(&frames, |f| f.series_id.as_str().to_owned(), GroupBy::Series, DEFAULT_RATIOS, 1).unwrap();
    let run = |execution| {
        let cfg = MtlConfig {
            architecture: MtlArchitecture {
                encoder_dims: vec![8],
                classifier_hidden: 6,
            },
            train: TrainConfig {
                max_epochs: 3,
                repeats: 5,
                execution,
                ..TrainConfig::default()
            },
            loss: LossVariant::Weighted,
        };
        train_mtl(&frames, &manifest, &cfg).unwrap()
    };
    let (a, b) = (run(Execution::Sequential), run(Execution::Parallel));
    assert_eq!(a.models, b.models);
    assert_eq!(a.summary, b.summary);
}

#[test]
fn lemb_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("frames.lemb");
    let mut extra = BTreeMap::new();
    extra.insert("source".to_owned(), serde_json::json!("unit"));
    let header = EmbeddingHeader {
        backbone: "resnet50".into(),
        tap: "avgpool".into(),
        dim: 3,
        extra,
    };
    let records: Vec<EmbeddingRecord> = (0..4)
        .map(|i| EmbeddingRecord {
            frame_id: format!("L{i}/f{i:04}"),
            view: if i % 2 == 0 { ViewId::Camera } else { ViewId::Screen },
            vector: vec![i as f32, -0.5, f32::MIN_POSITIVE],
        })
        .collect();
    write_lemb(BufWriter::new(File::create(&path).unwrap()), &header, &records).unwrap();
    let (h, r) = read_lemb(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(h, header);
    assert_eq!(r, records);
}
