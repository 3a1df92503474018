use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use didactic_core::evaluation::{
    cumulative_durations, duration_score_correlation, fmt_opt, learning_curve, macro_f1,
    questionmark_agreement, render_comparison, top_scores, write_timeline, ConfusionCounts,
    CurvePoint, EvalReport, RunMeta,
};
use didactic_core::ingestion::{
    generate_synthetic, load_corpus, parse_transcript, serialize_observations, write_annotation_csv,
    write_transcript, Manifest, SynthConfig,
};
use didactic_core::labeling::{
    label_transcripts_with, select_frame_samples, FrameSampleSpec, FrameSelection, LabeledTextSample,
};
use didactic_core::mtlvision::{
    assemble_frames, confusion_pairs, planted_embeddings, read_lemb, train_mtl, write_lemb,
    EmbeddingHeader, EmbeddingRecord, MtlArchitecture, MtlConfig, MtlError, MtlSummary,
    PlantedConcepts, RepeatMetrics, VISUAL_CLASSES,
};
use didactic_core::nncore::{Checkpoint, LossVariant};
use didactic_core::splitting::{compute_stats, split, GroupBy, Split, SplitManifest, DEFAULT_RATIOS};
use didactic_core::textmodels::{
    train_text_model, FastStyleConfig, TaskKind, TaskSpec, TextConfig, TextError,
    TextModel, TfidfConfig,
};
use didactic_core::{FeatureId, LectureMeta, Observation};

use crate::args::{
    Common, CurveArgs, EvalArgs, IngestArgs, LabelArgs, MtlArgs, ReportArgs, SplitArgs, StatsArgs,
    SynthArgs, TextArgs,
};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::stage::{Inputs, StageManifest, StageWriter};

fn to_jsonl<T: Serialize>(items: &[T]) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    for it in items {
        serde_json::to_writer(&mut out, it)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn from_jsonl<T: DeserializeOwned>(bytes: &[u8]) -> Result<Vec<T>, CliError> {
    bytes
        .split(|&b| b == b'\n')
        .filter(|l| !l.iter().all(u8::is_ascii_whitespace))
        .map(|l| Ok(serde_json::from_slice(l)?))
        .collect()
}

fn json_input<T: DeserializeOwned>(inputs: &mut Inputs, rel: &str, producer: &str) -> Result<T, CliError> {
    Ok(serde_json::from_slice(&inputs.read(rel, producer)?)?)
}

fn missing(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |_| CliError::MissingInput(format!("{} not found", path.display()))
}

pub fn synth(a: &SynthArgs) -> Result<String, CliError> {
    let config = PipelineConfig {
        seed: a.seed,
        ..a.common.config()
    };
    let sc = SynthConfig {
        seed: a.seed,
        n_lectures: a.lectures,
        events_per_lecture: a.events,
        visual_events_per_lecture: a.visual_events,
        ..SynthConfig::default()
    };
    let corpus = generate_synthetic(&sc).map_err(CliError::Synth)?;
    let mut w = StageWriter::create(&config.out, "synth")?;

    let mut buf = Vec::new();
    write_annotation_csv(&mut buf, &serialize_observations(&corpus.observations))?;
    w.write("annotations.csv", &buf)?;
    let mut buf = Vec::new();
    write_transcript(&mut buf, &corpus.transcripts)?;
    w.write("transcripts.jsonl", &buf)?;
    let truth: Vec<serde_json::Value> = corpus
        .transcripts
        .iter()
        .zip(&corpus.truth)
        .map(|(t, labels)| {
            json!({
                "lecture_id": t.lecture_id,
                "start_s": t.span.start_s,
                "end_s": t.span.end_s,
                "labels": labels,
            })
        })
        .collect();
    w.write("truth.jsonl", &to_jsonl(&truth)?)?;

    let mut embedding_files = Vec::new();
    let mut n_frames = 0;
    if a.visual_events > 0 {
        let specs = select_frame_samples(&corpus.observations, &corpus.lectures, FrameSelection::default());
        let concepts = PlantedConcepts::new(a.dim, [a.amplitude; VISUAL_CLASSES], a.noise, a.seed);
        let (header, records) = planted_embeddings(&specs, &concepts, a.seed);
        let mut buf = Vec::new();
        write_lemb(&mut buf, &header, &records)?;
        w.write("embeddings.lemb", &buf)?;
        embedding_files.push("embeddings.lemb".into());
        n_frames = specs.len();
    }
    let manifest = Manifest {
        lectures: corpus.lectures.clone(),
        annotation_files: vec!["annotations.csv".into()],
        transcript_files: vec!["transcripts.jsonl".into()],
        embedding_files,
    };
    w.write_json("manifest.json", &manifest)?;
    let dir = w.finish(&config, &Inputs::new(&config.out))?;
    Ok(format!(
        "synth: {} lectures, {} transcript events, {n_frames} frames -> {}",
        corpus.lectures.len(),
        corpus.transcripts.len(),
        dir.join("manifest.json").display()
    ))
}

pub fn ingest(a: &IngestArgs) -> Result<String, CliError> {
    let config = PipelineConfig {
        manifest: Some(a.manifest.clone()),
        ..a.common.config()
    };
    config.validate()?;
    let mut inputs = Inputs::new(&config.out);
    let manifest_bytes = fs::read(&a.manifest).map_err(missing(&a.manifest))?;
    inputs.external(a.manifest.display().to_string(), &manifest_bytes);
    let manifest = Manifest::load(&a.manifest)?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    for p in manifest
        .annotation_files
        .iter()
        .chain(&manifest.transcript_files)
        .chain(&manifest.embedding_files)
    {
        let full = Manifest::resolve(base, p);
        let bytes = fs::read(&full).map_err(missing(&full))?;
        inputs.external(format!("manifest:{}", p.display()), &bytes);
    }
    let corpus = load_corpus(&a.manifest, config.execution)?;

    let mut header: Option<EmbeddingHeader> = None;
    let mut records: Vec<EmbeddingRecord> = Vec::new();
    for p in &corpus.embedding_files {
        let (h, r) = read_lemb(BufReader::new(fs::File::open(p).map_err(missing(p))?))?;
        if let Some(h0) = &header {
            if h0.dim != h.dim {
                return Err(MtlError::Dimension {
                    expected: h0.dim,
                    found: h.dim,
                }
                .into());
            }
        } else {
            header = Some(h);
        }
        records.extend(r);
    }
    for warning in &corpus.warnings {
        log::warn!("transcript: {warning:?}");
    }

    let mut w = StageWriter::create(&config.out, "ingest")?;
    w.write_json("lectures.json", &corpus.lectures)?;
    w.write_json("observations.json", &corpus.observations)?;
    let mut buf = Vec::new();
    write_transcript(&mut buf, &corpus.transcripts)?;
    w.write("transcripts.jsonl", &buf)?;
    w.write_json("warnings.json", &corpus.warnings)?;
    if let Some(h) = &header {
        let mut buf = Vec::new();
        write_lemb(&mut buf, h, &records)?;
        w.write("embeddings.lemb", &buf)?;
    }
    w.finish(&config, &inputs)?;
    let n_events: usize = corpus.observations.iter().map(|o| o.events.len()).sum();
    Ok(format!(
        "ingest: {} lectures, {} observations ({n_events} events), {} transcript events, {} embedding records",
        corpus.lectures.len(),
        corpus.observations.len(),
        corpus.transcripts.len(),
        records.len()
    ))
}

struct IngestData {
    lectures: Vec<LectureMeta>,
    observations: Vec<Observation>,
}

fn ingest_data(inputs: &mut Inputs) -> Result<IngestData, CliError> {
    Ok(IngestData {
        lectures: json_input(inputs, "ingest/lectures.json", "ingest")?,
        observations: json_input(inputs, "ingest/observations.json", "ingest")?,
    })
}

pub fn label(a: &LabelArgs) -> Result<String, CliError> {
    let config = PipelineConfig {
        policy: a.policy.into(),
        ..a.common.config()
    };
    let mut inputs = Inputs::new(&config.out);
    let data = ingest_data(&mut inputs)?;
    let transcripts = parse_transcript(inputs.read("ingest/transcripts.jsonl", "ingest")?.as_slice())?.events;
    let samples = label_transcripts_with(config.execution, &transcripts, &data.observations, config.policy)?;
    let frames = select_frame_samples(&data.observations, &data.lectures, FrameSelection::default());
    let agreement = questionmark_agreement(&samples);

    let mut w = StageWriter::create(&config.out, "label")?;
    w.write("samples.jsonl", &to_jsonl(&samples)?)?;
    w.write_json("frames.json", &frames)?;
    w.write_json("agreement.json", &agreement)?;
    w.finish(&config, &inputs)?;
    let positives = samples.iter().filter(|s| s.has_question()).count();
    Ok(format!(
        "label: {} samples ({positives} with AQ|GQ), {} frames, question-mark agreement {}",
        samples.len(),
        frames.len(),
        fmt_opt(agreement.rate)
    ))
}

fn group_map(group_by: GroupBy, data: &IngestData) -> BTreeMap<String, String> {
    match group_by {
        GroupBy::Observer => didactic_core::splitting::observer_groups(&data.observations)
            .into_iter()
            .map(|(l, g)| (l.as_str().to_owned(), g))
            .collect(),
        GroupBy::Series => data
            .lectures
            .iter()
            .map(|l| (l.lecture_id.as_str().to_owned(), l.series_id.as_str().to_owned()))
            .collect(),
    }
}

pub fn split_cmd(a: &SplitArgs) -> Result<String, CliError> {
    let config = PipelineConfig {
        seed: a.seed,
        group_by: a.group_by.into(),
        ..a.common.config()
    };
    let mut inputs = Inputs::new(&config.out);
    let data = ingest_data(&mut inputs)?;
    let samples: Vec<LabeledTextSample> = from_jsonl(&inputs.read("label/samples.jsonl", "label")?)?;
    let frames: Vec<FrameSampleSpec> = json_input(&mut inputs, "label/frames.json", "label")?;

    let groups = group_map(config.group_by, &data);
    let key = |lecture: &str| groups.get(lecture).cloned().unwrap_or_else(|| lecture.to_owned());
    let text = split(
        &samples,
        |s| key(s.transcript.lecture_id.as_str()),
        config.group_by,
        DEFAULT_RATIOS,
        config.seed,
    )?;
    let mut w = StageWriter::create(&config.out, "split")?;
    w.write_json("text.json", &text)?;
    w.write_json("text_groups.json", &groups)?;
    let mut msg = format!(
        "split: text {:?} samples over {} groups",
        text.sample_counts,
        text.assignment.len()
    );
    if !frames.is_empty() {
        let series = group_map(GroupBy::Series, &data);
        let fm = split(
            &frames,
            |f| series.get(f.lecture_id.as_str()).cloned().unwrap_or_default(),
            GroupBy::Series,
            DEFAULT_RATIOS,
            config.seed,
        )?;
        w.write_json("frames.json", &fm)?;
        let _ = write!(msg, ", frames {:?} over {} series", fm.sample_counts, fm.assignment.len());
    }
    w.finish(&config, &inputs)?;
    Ok(msg)
}

struct TextSplits {
    parts: [Vec<LabeledTextSample>; 3],
    groups: BTreeMap<String, String>,
    hash: String,
}

fn text_splits(inputs: &mut Inputs) -> Result<TextSplits, CliError> {
    let samples: Vec<LabeledTextSample> = from_jsonl(&inputs.read("label/samples.jsonl", "label")?)?;
    let manifest: SplitManifest = json_input(inputs, "split/text.json", "split")?;
    let groups: BTreeMap<String, String> = json_input(inputs, "split/text_groups.json", "split")?;
    let mut parts: [Vec<LabeledTextSample>; 3] = Default::default();
    for s in samples {
        let l = s.transcript.lecture_id.as_str();
        let g = groups.get(l).map_or(l, String::as_str);
        let sp = manifest
            .split_of(g)
            .ok_or_else(|| CliError::Tampered(format!("group {g} has no split assignment")))?;
        parts[sp.index()].push(s);
    }
    let hash = inputs.hash_of("split/text.json").unwrap_or_default().to_owned();
    Ok(TextSplits { parts, groups, hash })
}

pub fn stats(a: &StatsArgs) -> Result<String, CliError> {
    let config = a.common.config();
    let mut inputs = Inputs::new(&config.out);
    let TextSplits { parts, .. } = text_splits(&mut inputs)?;
    let st = compute_stats(&parts[0], &parts[1], &parts[2])?;
    let table = st.render_table();
    let mut w = StageWriter::create(&config.out, "stats")?;
    w.write_json("stats.json", &st)?;
    w.write("stats.txt", table.as_bytes())?;
    w.finish(&config, &inputs)?;
    Ok(table)
}

fn text_config(config: &PipelineConfig, tune: bool) -> TextConfig {
    TextConfig {
        seed: config.seed,
        execution: config.execution,
        tfidf: TfidfConfig {
            loss: config.loss,
            ..TfidfConfig::default()
        },
        faststyle: FastStyleConfig {
            downsample_ratio: match config.loss {
                LossVariant::Weighted => Some(1.0),
                LossVariant::Plain => None,
            },
            ..FastStyleConfig::default()
        },
        tune_thresholds: tune,
        ..TextConfig::default()
    }
}

fn task_score(task: TaskSpec, counts: &[ConfusionCounts]) -> f64 {
    match task.kind {
        TaskKind::QuestionsOnly => counts.first().and_then(|c| c.f1()).unwrap_or(0.0),
        TaskKind::FullText => macro_f1(counts),
    }
}

pub fn train_text(a: &TextArgs) -> Result<String, CliError> {
    let config = a.config();
    let mut inputs = Inputs::new(&config.out);
    let TextSplits { parts, .. } = text_splits(&mut inputs)?;
    let task = TaskSpec { kind: config.task };
    log::info!("training {} on {} samples", config.model.name(), parts[0].len());
    let model = train_text_model(config.model, task, &parts[0], &parts[1], &text_config(&config, a.tune_thresholds))?;
    let dev_counts = model.evaluate(&parts[1], config.execution)?;

    let mut w = StageWriter::create(&config.out, &format!("train-text/{}", a.sel.dir_name()))?;
    let mut buf = Vec::new();
    model.to_checkpoint()?.write_to(&mut buf).map_err(TextError::from)?;
    w.write("model.ckpt", &buf)?;
    w.write_json("training.json", &model.training_log)?;
    w.finish(&config, &inputs)?;
    Ok(format!(
        "train-text: {} {} trained for {} epochs, dev score {:.3}",
        config.model.name(),
        task.name(),
        model.training_log.len(),
        task_score(task, &dev_counts)
    ))
}

pub fn eval(a: &EvalArgs) -> Result<String, CliError> {
    let name = a.sel.dir_name();
    let mut inputs = Inputs::new(&a.common.out);
    let model_rel = format!("train-text/{name}/model.ckpt");
    let ck = Checkpoint::read_from(inputs.read(&model_rel, "train-text")?.as_slice()).map_err(TextError::from)?;
    let model = TextModel::from_checkpoint(&ck)?;
    let trained = StageManifest::load(&a.common.out.join(format!("train-text/{name}")))?.config;
    let config = PipelineConfig {
        out: a.common.out.clone(),
        execution: a.common.execution.into(),
        ..trained
    };
    let TextSplits { parts, hash, .. } = text_splits(&mut inputs)?;
    let test = &parts[Split::Test.index()];
    let counts = model.evaluate(test, config.execution)?;
    let meta = RunMeta {
        model: model.kind.name().to_owned(),
        task: model.task.name().to_owned(),
        seed: config.seed,
        split_hash: Some(hash),
    };
    let report = EvalReport::from_counts(meta, &model.task.class_names(), &counts, test.len());

    let mut w = StageWriter::create(&config.out, &format!("eval/{name}"))?;
    w.write_json("report.json", &report)?;
    let table = report.render_table();
    w.write("report.txt", table.as_bytes())?;
    if model.task.kind == TaskKind::FullText {
        let mut predicted = Vec::with_capacity(test.len());
        for s in test {
            let labels = model.predict_labels(&s.transcript.text)?;
            predicted.push(LabeledTextSample {
                labels: FeatureId::TEXT
                    .iter()
                    .zip(labels)
                    .filter(|(_, on)| *on)
                    .map(|(f, _)| *f)
                    .collect(),
                ..s.clone()
            });
        }
        let mut buf = Vec::new();
        write_timeline(&predicted, &mut buf)?;
        w.write("timeline.jsonl", &buf)?;
    }
    w.finish(&config, &inputs)?;
    Ok(table)
}

pub fn curve(a: &CurveArgs) -> Result<String, CliError> {
    let config = PipelineConfig {
        fractions: a.fractions.0.clone(),
        ..a.text.config()
    };
    config.validate()?;
    let mut inputs = Inputs::new(&config.out);
    let TextSplits { parts, groups, .. } = text_splits(&mut inputs)?;
    let [train, dev, test] = &parts;
    let task = TaskSpec { kind: config.task };
    let tc = text_config(&config, a.text.tune_thresholds);
    let keys: Vec<&str> = train
        .iter()
        .map(|s| {
            let l = s.transcript.lecture_id.as_str();
            groups.get(l).map_or(l, String::as_str)
        })
        .collect();
    let positives: Vec<bool> = train.iter().map(|s| task.targets(&s.labels).iter().any(|&b| b)).collect();
    let points = learning_curve(&keys, &positives, &config.fractions, config.seed, config.execution, |idx| {
        let subset: Vec<LabeledTextSample> = idx.iter().map(|&i| train[i].clone()).collect();
        let m = train_text_model(config.model, task, &subset, dev, &tc)?;
        Ok::<f64, TextError>(task_score(task, &m.evaluate(test, config.execution)?))
    })?;

    let mut w = StageWriter::create(&config.out, &format!("curve/{}", a.text.sel.dir_name()))?;
    w.write_json("curve.json", &points)?;
    w.write("curve.csv", render_curve_csv(&points).as_bytes())?;
    w.finish(&config, &inputs)?;
    Ok(render_curve(&points))
}

fn render_curve_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("fraction,n_samples,n_groups,f1\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.fraction, p.n_samples, p.n_groups, p.f1);
    }
    s
}

fn render_curve(points: &[CurvePoint]) -> String {
    let mut s = format!("{:>8} {:>9} {:>7} {:>7}\n", "fraction", "samples", "groups", "f1");
    for p in points {
        let _ = writeln!(s, "{:>8.2} {:>9} {:>7} {:>7.3}", p.fraction, p.n_samples, p.n_groups, p.f1);
    }
    s
}

#[derive(Serialize, serde::Deserialize)]
struct MtlRunFile {
    repeats: Vec<RepeatMetrics>,
    summary: MtlSummary,
}

fn render_mtl(summary: &MtlSummary) -> String {
    let ms = |m: &Option<didactic_core::mtlvision::MeanStd>| {
        m.map_or_else(|| "n/a".to_owned(), |m| format!("{:.3} ± {:.3}", m.mean, m.std))
    };
    let mut s = format!(
        "accuracy {:.3} ± {:.3}  balanced accuracy {}  (n = {})\n",
        summary.accuracy.mean,
        summary.accuracy.std,
        ms(&summary.balanced_accuracy),
        summary.accuracy.n
    );
    let _ = writeln!(s, "{:<6} {:>15} {:>15}", "class", "precision", "recall");
    for c in &summary.per_class {
        let _ = writeln!(s, "{:<6} {:>15} {:>15}", c.class, ms(&c.precision), ms(&c.recall));
    }
    s
}

pub fn train_mtl_cmd(a: &MtlArgs) -> Result<String, CliError> {
    let config = PipelineConfig {
        seed: a.seed,
        loss: a.loss.into(),
        group_by: GroupBy::Series,
        train: a.train_config(),
        ..a.common.config()
    };
    let mut inputs = Inputs::new(&config.out);
    let data = ingest_data(&mut inputs)?;
    if !inputs.exists("ingest/embeddings.lemb") {
        return Err(CliError::MissingInput(
            "ingest/embeddings.lemb not found; the manifest lists no embedding files".into(),
        ));
    }
    let (_, embeddings) = read_lemb(inputs.read("ingest/embeddings.lemb", "ingest")?.as_slice())?;
    let frames: Vec<FrameSampleSpec> = json_input(&mut inputs, "label/frames.json", "label")?;
    if !inputs.exists("split/frames.json") {
        return Err(CliError::MissingInput("split/frames.json not found; run `split` on a corpus with frames".into()));
    }
    let manifest: SplitManifest = json_input(&mut inputs, "split/frames.json", "split")?;
    let records = assemble_frames(&frames, &data.lectures, &embeddings)?;
    let mc = MtlConfig {
        architecture: MtlArchitecture {
            encoder_dims: a.encoder_dims.clone(),
            classifier_hidden: a.classifier_hidden,
        },
        train: config.train.clone(),
        loss: config.loss,
    };
    let run = train_mtl(&records, &manifest, &mc)?;
    let test: Vec<_> = records
        .iter()
        .filter(|r| manifest.split_of(r.series_id.as_str()) == Some(Split::Test))
        .cloned()
        .collect();
    let confusion = confusion_pairs(&run.models, &test)?;

    let mut w = StageWriter::create(&config.out, "train-mtl")?;
    let file = MtlRunFile {
        repeats: run.repeats,
        summary: run.summary,
    };
    w.write_json("run.json", &file)?;
    let classes: Vec<&str> = FeatureId::VISUAL.iter().map(|f| f.code()).collect();
    w.write_json("confusion.json", &json!({"classes": classes, "missed_then_false": confusion}))?;
    for (r, m) in run.models.iter().enumerate() {
        let mut buf = Vec::new();
        m.to_checkpoint()?.write_to(&mut buf).map_err(MtlError::from)?;
        w.write(&format!("model-{r}.ckpt"), &buf)?;
    }
    let table = render_mtl(&file.summary);
    w.write("summary.txt", table.as_bytes())?;
    w.finish(&config, &inputs)?;
    Ok(table)
}

fn stage_subdirs(root: &Path, stage: &str) -> Result<Vec<String>, CliError> {
    let dir = root.join(stage);
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut names: Vec<String> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().to_str().map(str::to_owned))
        .collect();
    names.sort();
    Ok(names)
}

pub fn report(a: &ReportArgs) -> Result<String, CliError> {
    report_in(&a.common)
}

fn report_in(common: &Common) -> Result<String, CliError> {
    let config = common.config();
    let root = &config.out;
    let mut inputs = Inputs::new(root);
    let mut reports: Vec<EvalReport> = Vec::new();
    for d in stage_subdirs(root, "eval")? {
        reports.push(json_input(&mut inputs, &format!("eval/{d}/report.json"), "eval")?);
    }
    if reports.is_empty() {
        return Err(CliError::MissingInput(format!(
            "no evaluation reports under {}; run `eval` first",
            root.join("eval").display()
        )));
    }
    let mut text = String::new();
    for task in ["questions", "full"] {
        let rs: Vec<EvalReport> = reports.iter().filter(|r| r.meta.task == task).cloned().collect();
        if rs.is_empty() {
            continue;
        }
        let _ = writeln!(text, "== {task} task: test F1 ==");
        text.push_str(&render_comparison(&rs));
        text.push('\n');
        for r in &rs {
            text.push_str(&r.render_table());
            text.push('\n');
        }
    }

    let per_feature: Vec<BTreeMap<FeatureId, f64>> = reports
        .iter()
        .filter(|r| r.meta.task == "full")
        .map(|r| {
            r.classes
                .iter()
                .filter_map(|c| Some((c.class.parse::<FeatureId>().ok()?, c.f1?)))
                .collect()
        })
        .collect();
    let top = top_scores(&per_feature);
    let mut correlation = None;
    if !top.is_empty() && inputs.exists("ingest/observations.json") {
        let obs: Vec<Observation> = json_input(&mut inputs, "ingest/observations.json", "ingest")?;
        let durations = cumulative_durations(&obs);
        let pairs: Vec<(f64, f64)> = top
            .iter()
            .map(|(f, s)| (durations.get(f).copied().unwrap_or(0.0), *s))
            .collect();
        let _ = writeln!(text, "== top score per feature ==");
        for ((f, s), (d, _)) in top.iter().zip(&pairs) {
            let _ = writeln!(text, "{:<4} {:>7.3}  cumulative duration {:>10.1}s", f.code(), s, d);
        }
        match duration_score_correlation(&pairs) {
            Ok(c) => {
                let _ = writeln!(text, "duration vs score: pearson {:.3}  spearman {:.3}  (n = {})", c.pearson, c.spearman, c.n);
                correlation = Some(c);
            }
            Err(e) => {
                let _ = writeln!(text, "duration vs score: {e}");
            }
        }
        text.push('\n');
    }

    let mut curves = BTreeMap::new();
    for d in stage_subdirs(root, "curve")? {
        let points: Vec<CurvePoint> = json_input(&mut inputs, &format!("curve/{d}/curve.json"), "curve")?;
        let _ = writeln!(text, "== learning curve {d} ==");
        text.push_str(&render_curve(&points));
        text.push('\n');
        curves.insert(d, points);
    }

    let mut mtl = None;
    if inputs.exists("train-mtl/run.json") {
        let run: MtlRunFile = json_input(&mut inputs, "train-mtl/run.json", "train-mtl")?;
        let _ = writeln!(text, "== two-view frame classifier (test, {} repeats) ==", run.repeats.len());
        text.push_str(&render_mtl(&run.summary));
        mtl = Some(run.summary);
    }

    let mut w = StageWriter::create(root, "report")?;
    w.write_json(
        "report.json",
        &json!({
            "reports": reports,
            "top_scores": top.iter().map(|(f, s)| (f.code(), *s)).collect::<BTreeMap<_, _>>(),
            "duration_correlation": correlation,
            "curves": curves,
            "mtl": mtl,
        }),
    )?;
    w.write("summary.txt", text.as_bytes())?;
    w.finish(&config, &inputs)?;
    Ok(text)
}
