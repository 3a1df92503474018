//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use didactic_core::evaluation::{
    curve_subsets, f1_from_pr, fixtures::QUESTION_TASK_BASELINES, ConfusionCounts,
};
use didactic_core::ingestion::{generate_synthetic, SynthConfig, SynthCorpus};
use didactic_core::labeling::{label_transcripts, LabelPolicy, LabeledTextSample};
use didactic_core::mtlvision::{
    synthetic_frames, train_mtl, FrameRecord, MtlArchitecture, MtlConfig, MtlModel, SyntheticFrameConfig,
};
use didactic_core::nncore::{
    gradient_check, train, Activation, DenseNet, Example, Features, LossSpec, LossVariant, TrainConfig,
};
use didactic_core::splitting::{observer_groups, split, split_groups, GroupBy, Split, DEFAULT_RATIOS};
use didactic_core::textmodels::{
    train_text_model, FastStyleModel, ModelKind, TaskSpec, TextConfig, TfidfModel,
};
use didactic_core::{Execution, FeatureId, ObserverId};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// labeling

/// Overlap per the interval contract, written independently of the library.
fn overlaps(a: (f64, f64), b: (f64, f64)) -> bool {
    let (pa, pb) = (a.0 == a.1, b.0 == b.1);
    match (pa, pb) {
        (true, true) => false,
        (true, false) => b.0 <= a.0 && a.0 < b.1,
        (false, true) => a.0 <= b.0 && b.0 < a.1,
        (false, false) => a.0.max(b.0) < a.1.min(b.1),
    }
}

type OracleRow = (String, f64, f64, BTreeSet<FeatureId>, BTreeSet<ObserverId>);

fn brute_force(corpus: &SynthCorpus, policy: LabelPolicy) -> Vec<OracleRow> {
    let mut rows = Vec::new();
    for t in &corpus.transcripts {
        let obs: Vec<_> = corpus.observations.iter().filter(|o| o.lecture_id == t.lecture_id).collect();
        let n_obs = obs.iter().map(|o| &o.observer_id).collect::<BTreeSet<_>>().len();
        let mut hits: BTreeMap<FeatureId, BTreeSet<ObserverId>> = BTreeMap::new();
        for o in &obs {
            for e in &o.events {
                if FeatureId::TEXT.contains(&e.feature)
                    && overlaps((t.span.start_s, t.span.end_s), (e.span.start_s, e.span.end_s))
                {
                    hits.entry(e.feature).or_default().insert(o.observer_id.clone());
                }
            }
        }
        let mut labels = BTreeSet::new();
        let mut sources = BTreeSet::new();
        for (f, who) in hits {
            let keep = match policy {
                LabelPolicy::Union => true,
                LabelPolicy::Majority => 2 * who.len() > n_obs,
            };
            if keep {
                labels.insert(f);
                sources.extend(who);
            }
        }
        rows.push((t.lecture_id.as_str().to_owned(), t.span.start_s, t.span.end_s, labels, sources));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    rows
}

fn labeling_oracle() -> Outcome {
    let corpus = generate_synthetic(&SynthConfig {
        seed: 11,
        n_lectures: 6,
        events_per_lecture: 200,
        observers_per_lecture: 3,
        n_teams: 3,
        observer_recall: 0.6,
        ..SynthConfig::default()
    })
    .map_err(|e| e)?;
    let n_ann: usize = corpus.observations.iter().flat_map(|o| &o.events).filter(|e| FeatureId::TEXT.contains(&e.feature)).count();
    let n_obs = corpus.observations.iter().map(|o| &o.observer_id).collect::<BTreeSet<_>>().len();
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    for policy in [LabelPolicy::Union, LabelPolicy::Majority] {
        let start = Instant::now();
        let out = label_transcripts(&corpus.transcripts, &corpus.observations, policy).map_err(|e| e.to_string())?;
        worst = worst.max(start.elapsed().as_secs_f64());
        let got: Vec<OracleRow> = out
            .into_iter()
            .map(|s: LabeledTextSample| {
                (
                    s.transcript.lecture_id.as_str().to_owned(),
                    s.transcript.span.start_s,
                    s.transcript.span.end_s,
                    s.labels,
                    s.source_observers,
                )
            })
            .collect();
        let want = brute_force(&corpus, policy);
        mismatches += got.len().abs_diff(want.len()) + got.iter().zip(&want).filter(|(a, b)| a != b).count();
    }
    check(
        mismatches == 0 && worst < 1.0 && corpus.transcripts.len() >= 1000 && n_ann >= 200 && n_obs >= 3,
        format!(
            "{} transcripts, {n_ann} text annotation events, {} lectures, {n_obs} observers; {mismatches} mismatches; slowest run {:.3}s (< 1 s)",
            corpus.transcripts.len(),
            corpus.lectures.len(),
            worst
        ),
    )
}

// ---------------------------------------------------------------------------
// splitting

fn split_invariants() -> Outcome {
    let mut worst = 0.0f64;
    let mut violations = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let sizes: BTreeMap<String, usize> = (0..50)
            .map(|g| {
                // heavy-tailed group sizes between 1 and ~400
                let u: f64 = rng.random_range(0.0..1.0);
                (format!("g{g:02}"), (1.0 + 400.0 * u.powi(3)).round() as usize)
            })
            .collect();
        let m = split_groups(&sizes, GroupBy::Observer, DEFAULT_RATIOS, seed).map_err(|e| e.to_string())?;
        let keys: BTreeSet<&String> = m.assignment.keys().collect();
        if keys != sizes.keys().collect() {
            violations.push(format!("seed {seed}: assignment is not a partition"));
        }
        let total: usize = sizes.values().sum();
        let mut counts = [0usize; 3];
        for (g, n) in &sizes {
            counts[m.split_of(g).expect("assigned").index()] += n;
        }
        if counts != m.sample_counts || counts.iter().any(|&c| c == 0) {
            violations.push(format!("seed {seed}: counts {counts:?} vs {:?}", m.sample_counts));
        }
        for s in 0..3 {
            let dev = (counts[s] as f64 / total as f64 - DEFAULT_RATIOS[s]).abs();
            worst = worst.max(dev);
        }
        // atomicity on samples: every sample lands where its group does
        let samples: Vec<(usize, &String)> =
            sizes.iter().flat_map(|(g, &n)| (0..n).map(move |i| (i, g))).collect();
        let m2 = split(&samples, |s| s.1.clone(), GroupBy::Observer, DEFAULT_RATIOS, seed).map_err(|e| e.to_string())?;
        if m2.assignment != m.assignment {
            violations.push(format!("seed {seed}: sample-level split disagrees"));
        }
    }
    check(
        violations.is_empty() && worst <= 0.10,
        format!(
            "100 seeds x 50 uneven groups; max |realized - target| = {worst:.4} (<= 0.10); {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(": {v}")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------
// metric fixtures

fn metric_fixtures() -> Outcome {
    let printed = [
        ("BERT", 0.383),
        ("VowpalWabbit", 0.429),
        ("FastText", 0.373),
        ("RoBERTa", 0.207),
        ("XLNet", 0.255),
        ("TF-IDF", 0.164),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, f1) in printed {
        let row = QUESTION_TASK_BASELINES
            .iter()
            .find(|r| r.model == name)
            .ok_or_else(|| format!("no fixture row for {name}"))?;
        let f = f1_from_pr(row.precision, row.recall).ok_or("undefined F1")?;
        worst = worst.max((f - f1).abs());
        parts.push(format!("{name} {f:.4}"));
    }
    check(worst <= 0.002, format!("{}; max deviation {worst:.4} (<= 0.002)", parts.join(", ")))
}

// ---------------------------------------------------------------------------
// gradients

fn random_examples(n: usize, dim: usize, out: usize, sparse: bool, onehot: bool, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let input = if sparse {
                let mut idx: Vec<usize> = (0..4).map(|_| rng.random_range(0..dim)).collect();
                idx.sort_unstable();
                idx.dedup();
                Features::Sparse(idx.into_iter().map(|i| (i, rng.random_range(0.1..1.0))).collect())
            } else {
                Features::Dense((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            };
            let target = if onehot {
                let k = rng.random_range(0..out);
                (0..out).map(|c| if c == k { 1.0 } else { 0.0 }).collect()
            } else {
                (0..out).map(|_| if rng.random_bool(0.3) { 1.0 } else { 0.0 }).collect()
            };
            Example { input, target }
        })
        .collect()
}

fn gradient_correctness() -> Outcome {
    let mut rows: Vec<(String, f64)> = Vec::new();
    for seed in 0..3u64 {
        for (name, hidden, classes) in [("tfidf-mlp", Some(6), 1), ("tfidf-mlp-full", Some(6), 6), ("tfidf-linear", None, 6)] {
            let net = TfidfModel::new_head(30, hidden, classes, seed).map_err(|e| e.to_string())?;
            let data = random_examples(6, 30, classes, true, false, seed + 10);
            for loss in [LossSpec::bce(), LossSpec::balanced_bce(data.iter().map(|e| e.target.as_slice()))] {
                rows.push((name.into(), gradient_check(&net, &data, &loss, 1e-5).map_err(|e| e.to_string())?));
            }
        }
        let fs = FastStyleModel::init(64, 8, 6, seed).map_err(|e| e.to_string())?;
        let data = random_examples(6, 8, 6, false, false, seed + 20);
        let loss = LossSpec::balanced_bce(data.iter().map(|e| e.target.as_slice()));
        rows.push(("faststyle-output".into(), gradient_check(&fs.output, &data, &loss, 1e-5).map_err(|e| e.to_string())?));

        let deep = DenseNet::new(&[7, 9, 8, 5], &[Activation::LeakyRelu, Activation::LeakyRelu, Activation::Sigmoid], seed)
            .map_err(|e| e.to_string())?;
        let data = random_examples(6, 7, 5, false, false, seed + 30);
        rows.push(("mlp-3layer-bce".into(), gradient_check(&deep, &data, &LossSpec::bce(), 1e-5).map_err(|e| e.to_string())?));
        let ce = DenseNet::new(&[7, 9, 4], &[Activation::LeakyRelu, Activation::Identity], seed).map_err(|e| e.to_string())?;
        let data = random_examples(6, 7, 4, false, true, seed + 40);
        rows.push(("mlp-softmax-ce".into(), gradient_check(&ce, &data, &LossSpec::ce(), 1e-5).map_err(|e| e.to_string())?));

        for (name, arch) in [
            ("mtl-maxpool", MtlArchitecture { encoder_dims: vec![8, 8, 8], classifier_hidden: 6 }),
            ("mtl-maxpool-linear", MtlArchitecture { encoder_dims: vec![8], classifier_hidden: 0 }),
        ] {
            let m = MtlModel::new(10, &arch, seed).map_err(|e| e.to_string())?;
            let frames = synthetic_frames(&SyntheticFrameConfig {
                n_frames: 6,
                dim: 10,
                seed: seed + 50,
                ..SyntheticFrameConfig::default()
            });
            let targets: Vec<Vec<f64>> = frames.iter().map(FrameRecord::target).collect();
            for loss in [LossSpec::bce(), LossSpec::balanced_bce(targets.iter().map(|t| t.as_slice()))] {
                rows.push((name.into(), gradient_check(&m, &frames, &loss, 1e-5).map_err(|e| e.to_string())?));
            }
        }
    }
    let mut by_arch: BTreeMap<String, f64> = BTreeMap::new();
    for (n, e) in &rows {
        let w = by_arch.entry(n.clone()).or_insert(0.0);
        *w = w.max(*e);
    }
    let worst = by_arch.values().copied().fold(0.0, f64::max);
    let detail = by_arch.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect::<Vec<_>>().join(", ");
    check(worst < 1e-4, format!("max relative error {worst:.2e} (< 1e-4); {detail}"))
}

// ---------------------------------------------------------------------------
// planted-rule text task

struct TextSplit {
    train: Vec<LabeledTextSample>,
    dev: Vec<LabeledTextSample>,
    test: Vec<LabeledTextSample>,
    groups: Vec<String>,
}

fn planted_question_corpus() -> Result<(TextSplit, f64), String> {
    let corpus = generate_synthetic(&SynthConfig {
        seed: 5,
        n_lectures: 40,
        events_per_lecture: 250,
        ..SynthConfig::default()
    })?;
    let samples = label_transcripts(&corpus.transcripts, &corpus.observations, LabelPolicy::Union).map_err(|e| e.to_string())?;
    for s in &samples {
        if s.has_question() != s.transcript.text.contains('?') {
            return Err("positives are not exactly the '?'-bearing events".into());
        }
    }
    let positive = samples.iter().filter(|s| s.has_question()).count() as f64 / samples.len() as f64;
    let groups = observer_groups(&corpus.observations);
    let key = |s: &LabeledTextSample| groups[&s.transcript.lecture_id].clone();
    let m = split(&samples, key, GroupBy::Observer, DEFAULT_RATIOS, 3).map_err(|e| e.to_string())?;
    let mut out = TextSplit { train: vec![], dev: vec![], test: vec![], groups: vec![] };
    for s in samples {
        match m.split_of(&key(&s)).expect("assigned") {
            Split::Train => {
                out.groups.push(key(&s));
                out.train.push(s);
            }
            Split::Dev => out.dev.push(s),
            Split::Test => out.test.push(s),
        }
    }
    Ok((out, positive))
}

fn question_f1(counts: &[ConfusionCounts]) -> f64 {
    counts[0].f1().unwrap_or(0.0)
}

fn planted_rule_text(data: &TextSplit, positive: f64) -> Outcome {
    let start = Instant::now();
    let task = TaskSpec::questions_only();
    let cfg = TextConfig::default();
    let mut f1 = BTreeMap::new();
    for kind in [ModelKind::Tfidf, ModelKind::FastStyle, ModelKind::Bandit] {
        let m = train_text_model(kind, task, &data.train, &data.dev, &cfg).map_err(|e| e.to_string())?;
        let counts = m.evaluate(&data.test, Execution::default()).map_err(|e| e.to_string())?;
        f1.insert(kind.name(), question_f1(&counts));
    }
    let secs = start.elapsed().as_secs_f64();
    let n = data.train.len() + data.dev.len() + data.test.len();
    check(
        f1["tfidf"] >= 0.95 && f1["faststyle"] >= 0.95 && f1["bandit"] >= 0.85 && secs < 300.0 && n >= 10_000,
        format!(
            "{n} events, {:.1}% positive; test F1 tfidf {:.3} (>= 0.95), faststyle {:.3} (>= 0.95), bandit {:.3} (>= 0.85); {secs:.1}s (< 300 s)",
            100.0 * positive,
            f1["tfidf"],
            f1["faststyle"],
            f1["bandit"]
        ),
    )
}

// ---------------------------------------------------------------------------
// imbalance

fn imbalanced_concept(n: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, 1.0).expect("unit normal");
    (0..n)
        .map(|_| {
            let pos = rng.random_range(0..21) == 0;
            let x: Vec<f64> = (0..8)
                .map(|d| rng.sample(normal) + if pos && d < 2 { 1.0 } else { 0.0 })
                .collect();
            Example {
                input: Features::Dense(x),
                target: vec![if pos { 1.0 } else { 0.0 }],
            }
        })
        .collect()
}

fn minority_recall(net: &DenseNet, data: &[Example]) -> f64 {
    let mut c = ConfusionCounts::default();
    for e in data {
        let p = net.forward_input(e.input.as_input()).expect("forward")[0] > 0.5;
        c.record(p, e.target[0] > 0.5);
    }
    c.recall().unwrap_or(0.0)
}

fn imbalance_behavior() -> Outcome {
    let mut gaps = Vec::new();
    let mut detail = Vec::new();
    for seed in 0..3u64 {
        let train_set = imbalanced_concept(4200, 100 + seed);
        let dev_set = imbalanced_concept(1050, 200 + seed);
        let test_set = imbalanced_concept(4200, 300 + seed);
        let cfg = TrainConfig {
            learning_rate: 0.05,
            max_epochs: 20,
            early_stop_patience: 0,
            seed,
            ..TrainConfig::default()
        };
        let mut recall = [0.0; 2];
        for (i, variant) in [LossVariant::Plain, LossVariant::Weighted].into_iter().enumerate() {
            let loss = variant.bce_spec(train_set.iter().map(|e| e.target.as_slice()));
            let net = DenseNet::mlp(8, &[16], 1, Activation::LeakyRelu, Activation::Sigmoid, seed).map_err(|e| e.to_string())?;
            let (net, _) = train(net, &train_set, &dev_set, &loss, &cfg, |_, _| 0.0).map_err(|e| e.to_string())?;
            recall[i] = minority_recall(&net, &test_set);
        }
        gaps.push(recall[1] - recall[0]);
        detail.push(format!("seed {seed}: {:.3} -> {:.3}", recall[0], recall[1]));
    }
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        min_gap >= 0.10,
        format!("1:20 concept, minority recall plain -> weighted: {}; min gain {:.1} pp (>= 10 pp)", detail.join(", "), 100.0 * min_gap),
    )
}

// ---------------------------------------------------------------------------
// MTL head

fn mtl_head() -> Outcome {
    let start = Instant::now();
    let frames = synthetic_frames(&SyntheticFrameConfig {
        seed: 9,
        n_frames: 5000,
        dim: 64,
        ..SyntheticFrameConfig::default()
    });
    let manifest = split(&frames, |f| f.series_id.as_str().to_owned(), GroupBy::Series, DEFAULT_RATIOS, 4)
        .map_err(|e| e.to_string())?;
    let cfg = MtlConfig {
        architecture: MtlArchitecture {
            encoder_dims: vec![64, 64, 64],
            classifier_hidden: 32,
        },
        train: TrainConfig {
            learning_rate: 0.05,
            max_epochs: 30,
            early_stop_patience: 5,
            repeats: 5,
            seed: 21,
            ..TrainConfig::default()
        },
        loss: LossVariant::Weighted,
    };
    let run = train_mtl(&frames, &manifest, &cfg).map_err(|e| e.to_string())?;
    let test: Vec<&FrameRecord> = frames
        .iter()
        .filter(|f| manifest.split_of(f.series_id.as_str()) == Some(Split::Test))
        .collect();
    let mut asymmetric = 0usize;
    for m in &run.models {
        for f in &test {
            if m.forward_views(&f.camera, &f.screen).ok() != m.forward_views(&f.screen, &f.camera).ok() {
                asymmetric += 1;
            }
        }
    }
    let bal = run.summary.balanced_accuracy.ok_or("balanced accuracy undefined")?;
    check(
        run.repeats.len() == 5 && bal.mean >= 0.90 && asymmetric == 0 && run.repeats.iter().all(|r| r.view_order_invariant),
        format!(
            "E=64, 9 concepts, {} frames, {} test frames in {} series, 5 repeats: mean balanced accuracy {:.3} ± {:.3} (>= 0.90); view-swap differences {asymmetric} of {}; {:.1}s",
            frames.len(),
            test.len(),
            manifest.groups_in(Split::Test).count(),
            bal.mean,
            bal.std,
            test.len() * run.models.len(),
            start.elapsed().as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// learning curve

fn learning_curve_trend(data: &TextSplit) -> Outcome {
    let fractions = didactic_core::evaluation::default_fractions();
    let positives: Vec<bool> = data.train.iter().map(LabeledTextSample::has_question).collect();
    let task = TaskSpec::questions_only();
    let cfg = TextConfig::default();
    let points = didactic_core::evaluation::learning_curve(
        &data.groups,
        &positives,
        &fractions,
        7,
        Execution::default(),
        |idx| {
            let subset: Vec<LabeledTextSample> = idx.iter().map(|&i| data.train[i].clone()).collect();
            let m = train_text_model(ModelKind::Tfidf, task, &subset, &data.dev, &cfg)?;
            Ok::<f64, didactic_core::textmodels::TextError>(question_f1(&m.evaluate(&data.test, Execution::default())?))
        },
    )
    .map_err(|e| e.to_string())?;
    let nested = curve_subsets(&data.groups, &fractions, 7)
        .map_err(|e| e.to_string())?
        .windows(2)
        .all(|w| w[0].iter().all(|i| w[1].contains(i)));
    let f1: Vec<f64> = points.iter().map(|p| p.f1).collect();
    let mut worst_drop = 0.0f64;
    for j in 0..f1.len() {
        for i in 0..j {
            worst_drop = worst_drop.max(f1[i] - f1[j]);
        }
    }
    let (first, last) = (f1[0], f1[f1.len() - 1]);
    check(
        points.len() == 10 && nested && last >= first && worst_drop <= 0.05,
        format!(
            "tfidf F1 by fraction [{}]; F1(1.0) {last:.3} >= F1(0.1) {first:.3}; largest drop {worst_drop:.3} (<= 0.05); nested subsets {nested}",
            f1.iter().map(|f| format!("{f:.3}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

// ---------------------------------------------------------------------------
// end-to-end determinism

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).expect("readable") {
            let p = e.expect("entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).expect("prefix").to_path_buf(), fs::read(&p).expect("readable"));
            }
        }
    }
    out
}

fn pipeline(dir: &Path) -> Result<(), String> {
    let steps: &[&[&str]] = &[
        &["synth", "--seed", "42"],
        &["ingest", "--manifest", "out/synth/manifest.json"],
        &["label"],
        &["split", "--seed", "1"],
        &["train-text", "--model", "tfidf", "--seed", "3"],
        &["eval", "--model", "tfidf"],
        &["train-text", "--model", "faststyle", "--task", "full", "--seed", "3"],
        &["eval", "--model", "faststyle", "--task", "full"],
        &["report"],
    ];
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_didactic"))
            .current_dir(dir)
            .args(*args)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()));
        }
    }
    Ok(())
}

fn end_to_end_determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    pipeline(a.path())?;
    pipeline(b.path())?;
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    let differing: Vec<String> = ta
        .keys()
        .chain(tb.keys())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|k| ta.get(*k) != tb.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    check(
        differing.is_empty() && ta.len() > 20,
        format!(
            "synth -> ingest -> label -> split -> train-text -> eval -> report twice: {} files, {} differ{}",
            ta.len(),
            differing.len(),
            differing.first().map(|d| format!(" (first: {d})")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let planted = planted_question_corpus();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("labeling-oracle-equivalence", Box::new(labeling_oracle)),
        ("split-invariants", Box::new(split_invariants)),
        ("metric-fixtures", Box::new(metric_fixtures)),
        ("gradient-correctness", Box::new(gradient_correctness)),
        (
            "planted-rule-text-task",
            Box::new(|| {
                let (d, p) = planted.as_ref().map_err(Clone::clone)?;
                planted_rule_text(d, *p)
            }),
        ),
        ("imbalance-weighted-recall", Box::new(imbalance_behavior)),
        ("mtl-head", Box::new(mtl_head)),
        (
            "learning-curve",
            Box::new(|| learning_curve_trend(&planted.as_ref().map_err(Clone::clone)?.0)),
        ),
        ("end-to-end-determinism", Box::new(end_to_end_determinism)),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| f())).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {name} [{secs:.1}s]: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name} [{secs:.1}s]: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
