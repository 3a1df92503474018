//! Text detectors over transcript events: TF-IDF with a dense head, a
//! hashed n-gram embedding classifier, and a cost-sensitive contextual bandit.

mod bandit;
mod faststyle;
mod tfidf;
mod tokenize;

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bandit::{sample_arm, BanditConfig, BanditModel, EpsilonGreedy, ExplorationPolicy};
pub use faststyle::{downsample, FastStyleConfig, FastStyleModel};
pub use tfidf::{TfidfModel, TfidfVectorizer, DEFAULT_VOCABULARY};
pub use crate::nncore::LossVariant;
pub use tokenize::{fnv1a, hashed_features, hashed_ngrams, ngrams, tokenize};

use crate::domain::FeatureId;
use crate::evaluation::{macro_f1, per_class_counts, ConfusionCounts};
use crate::labeling::LabeledTextSample;
use crate::nncore::{
    self, Checkpoint, CheckpointError, EpochRecord, Example, Features, NetError, TrainConfig,
};
use crate::par::{self, Execution};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("model has not been trained")]
    ModelNotTrained,
    #[error("invalid text model config: {0}")]
    Config(String),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// One binary target: AQ or GQ.
    QuestionsOnly,
    /// Six independent binary targets, one per text feature.
    FullText,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
}

impl TaskSpec {
    pub fn questions_only() -> Self {
        Self {
            kind: TaskKind::QuestionsOnly,
        }
    }

    pub fn full_text() -> Self {
        Self {
            kind: TaskKind::FullText,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            TaskKind::QuestionsOnly => "questions",
            TaskKind::FullText => "full",
        }
    }

    pub fn n_classes(&self) -> usize {
        match self.kind {
            TaskKind::QuestionsOnly => 1,
            TaskKind::FullText => FeatureId::TEXT.len(),
        }
    }

    pub fn class_names(&self) -> Vec<String> {
        match self.kind {
            TaskKind::QuestionsOnly => vec!["AQ|GQ".to_owned()],
            TaskKind::FullText => FeatureId::TEXT.iter().map(|f| f.code().to_owned()).collect(),
        }
    }

    pub fn targets(&self, labels: &BTreeSet<FeatureId>) -> Vec<bool> {
        match self.kind {
            TaskKind::QuestionsOnly => vec![labels.iter().any(|f| f.is_question())],
            TaskKind::FullText => FeatureId::TEXT.iter().map(|f| labels.contains(f)).collect(),
        }
    }

    /// Bandit arm names: for questions, "not a question" and "question".
    pub fn bandit_arms(&self) -> Vec<String> {
        match self.kind {
            TaskKind::QuestionsOnly => vec!["not_question".to_owned(), "question".to_owned()],
            TaskKind::FullText => self.class_names(),
        }
    }

    /// Cost 0 for arms consistent with the targets, 1 otherwise.
    pub fn arm_costs(&self, targets: &[bool]) -> Vec<f64> {
        let cost = |ok: bool| if ok { 0.0 } else { 1.0 };
        match self.kind {
            TaskKind::QuestionsOnly => vec![cost(!targets[0]), cost(targets[0])],
            TaskKind::FullText => targets.iter().map(|&t| cost(t)).collect(),
        }
    }

    /// Per-class scores in [0, 1] from predicted arm costs.
    pub fn bandit_scores(&self, costs: &[f64]) -> Vec<f64> {
        match self.kind {
            TaskKind::QuestionsOnly => vec![(0.5 + (costs[0] - costs[1]) / 2.0).clamp(0.0, 1.0)],
            TaskKind::FullText => costs.iter().map(|c| (1.0 - c).clamp(0.0, 1.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tfidf,
    FastStyle,
    Bandit,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Tfidf => "tfidf",
            ModelKind::FastStyle => "faststyle",
            ModelKind::Bandit => "bandit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfConfig {
    pub max_features: usize,
    /// Width of the hidden layer; `None` is a linear head.
    pub hidden: Option<usize>,
    /// Optimizer settings; the seed is taken from [`TextConfig::seed`].
    pub train: TrainConfig,
    pub loss: LossVariant,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        Self {
            max_features: DEFAULT_VOCABULARY,
            hidden: Some(32),
            train: TrainConfig {
                learning_rate: 0.2,
                max_epochs: 30,
                early_stop_patience: 5,
                ..TrainConfig::default()
            },
            loss: LossVariant::Weighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextConfig {
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
    pub tfidf: TfidfConfig,
    pub faststyle: FastStyleConfig,
    pub bandit: BanditConfig,
    /// Pick per-class decision thresholds on dev instead of 0.5.
    pub tune_thresholds: bool,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            execution: Execution::default(),
            tfidf: TfidfConfig::default(),
            faststyle: FastStyleConfig::default(),
            bandit: BanditConfig::default(),
            tune_thresholds: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedText {
    Tfidf(TfidfModel),
    FastStyle(FastStyleModel),
    Bandit(BanditModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextModel {
    pub kind: ModelKind,
    pub task: TaskSpec,
    /// Decision threshold per class.
    pub thresholds: Vec<f64>,
    /// Per-epoch (or per-pass) training loss and dev macro F1.
    pub training_log: Vec<EpochRecord>,
    pub trained: Option<TrainedText>,
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    kind: ModelKind,
    task: TaskSpec,
    thresholds: Vec<f64>,
    training_log: Vec<EpochRecord>,
}

#[derive(Serialize, Deserialize)]
struct FastStyleMeta {
    buckets: usize,
    dim: usize,
    downsample_ratio: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct BanditMeta {
    buckets: usize,
    arms: Vec<String>,
    epsilon: f64,
    learning_rate: f64,
}

impl TextModel {
    pub fn untrained(kind: ModelKind, task: TaskSpec) -> Self {
        Self {
            kind,
            task,
            thresholds: vec![0.5; task.n_classes()],
            training_log: Vec::new(),
            trained: None,
        }
    }

    pub fn is_trained(&self) -> bool {
        self.trained.is_some()
    }

    /// Class scores in [0, 1] for a raw text.
    pub fn scores(&self, text: &str) -> Result<Vec<f64>, TextError> {
        match self.trained.as_ref().ok_or(TextError::ModelNotTrained)? {
            TrainedText::Tfidf(m) => m.scores(text),
            TrainedText::FastStyle(m) => m.scores(text),
            TrainedText::Bandit(m) => Ok(self.task.bandit_scores(&m.predicted_costs(&m.features(text)))),
        }
    }

    pub fn predict(&self, sample: &LabeledTextSample) -> Result<Vec<f64>, TextError> {
        self.scores(&sample.transcript.text)
    }

    pub fn predict_labels(&self, text: &str) -> Result<Vec<bool>, TextError> {
        Ok(self.decide(&self.scores(text)?))
    }

    fn decide(&self, scores: &[f64]) -> Vec<bool> {
        scores.iter().zip(&self.thresholds).map(|(s, t)| s > t).collect()
    }

    pub fn score_all(&self, samples: &[LabeledTextSample], exec: Execution) -> Result<Vec<Vec<f64>>, TextError> {
        par::map(exec, samples, |s| self.predict(s)).into_iter().collect()
    }

    /// Per-class confusion counts on `samples` at the current thresholds.
    pub fn evaluate(&self, samples: &[LabeledTextSample], exec: Execution) -> Result<Vec<ConfusionCounts>, TextError> {
        let scores = self.score_all(samples, exec)?;
        let pred: Vec<Vec<bool>> = scores.iter().map(|s| self.decide(s)).collect();
        let truth: Vec<Vec<bool>> = samples.iter().map(|s| self.task.targets(&s.labels)).collect();
        per_class_counts(&pred, &truth).map_err(|e| TextError::Config(e.to_string()))
    }

    /// Chooses each class's threshold from 0.05, 0.10, ..., 0.95 to maximize
    /// dev F1; classes whose F1 stays undefined keep their threshold.
    pub fn tune_thresholds(&mut self, dev: &[LabeledTextSample], exec: Execution) -> Result<(), TextError> {
        let scores = self.score_all(dev, exec)?;
        let truth: Vec<Vec<bool>> = dev.iter().map(|s| self.task.targets(&s.labels)).collect();
        for c in 0..self.task.n_classes() {
            let mut best: Option<(f64, f64)> = None;
            for step in 1..20 {
                let t = step as f64 * 0.05;
                let mut cc = ConfusionCounts::default();
                for (s, y) in scores.iter().zip(&truth) {
                    cc.record(s[c] > t, y[c]);
                }
                if let Some(f) = cc.f1() {
                    if best.is_none_or(|(bf, _)| f > bf) {
                        best = Some((f, t));
                    }
                }
            }
            if let Some((_, t)) = best {
                self.thresholds[c] = t;
            }
        }
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint, TextError> {
        let trained = self.trained.as_ref().ok_or(TextError::ModelNotTrained)?;
        let mut ck = Checkpoint::new();
        ck.set_meta(
            "text_model",
            &ModelMeta {
                kind: self.kind,
                task: self.task,
                thresholds: self.thresholds.clone(),
                training_log: self.training_log.clone(),
            },
        )?;
        match trained {
            TrainedText::Tfidf(m) => {
                ck.put_text("vocabulary", m.vectorizer.vocabulary_table());
                ck.put_floats("idf", &m.vectorizer.idf);
                ck.put_net("head", &m.head)?;
            }
            TrainedText::FastStyle(m) => {
                ck.set_meta(
                    "faststyle",
                    &FastStyleMeta {
                        buckets: m.buckets,
                        dim: m.dim,
                        downsample_ratio: m.downsample_ratio,
                    },
                )?;
                ck.put_floats("embeddings", &m.embeddings);
                ck.put_net("output", &m.output)?;
            }
            TrainedText::Bandit(m) => {
                ck.set_meta(
                    "bandit",
                    &BanditMeta {
                        buckets: m.buckets,
                        arms: m.arms.clone(),
                        epsilon: m.epsilon,
                        learning_rate: m.learning_rate,
                    },
                )?;
                for (i, w) in m.weights.iter().enumerate() {
                    ck.put_floats(&format!("arm{i}.weights"), w);
                }
            }
        }
        Ok(ck)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, TextError> {
        let meta: ModelMeta = ck.meta("text_model")?;
        let trained = match meta.kind {
            ModelKind::Tfidf => {
                let idf = ck.floats("idf")?;
                TrainedText::Tfidf(TfidfModel {
                    vectorizer: TfidfVectorizer::from_table(ck.text("vocabulary")?, idf)?,
                    head: ck.net("head")?,
                })
            }
            ModelKind::FastStyle => {
                let fm: FastStyleMeta = ck.meta("faststyle")?;
                let embeddings = ck.floats("embeddings")?;
                if embeddings.len() != fm.buckets * fm.dim {
                    return Err(TextError::Format("embedding table size".into()));
                }
                TrainedText::FastStyle(FastStyleModel {
                    buckets: fm.buckets,
                    dim: fm.dim,
                    embeddings,
                    output: ck.net("output")?,
                    downsample_ratio: fm.downsample_ratio,
                })
            }
            ModelKind::Bandit => {
                let bm: BanditMeta = ck.meta("bandit")?;
                let weights = (0..bm.arms.len())
                    .map(|i| ck.floats(&format!("arm{i}.weights")))
                    .collect::<Result<Vec<_>, _>>()?;
                if weights.iter().any(|w| w.len() != bm.buckets + 1) {
                    return Err(TextError::Format("bandit weight size".into()));
                }
                TrainedText::Bandit(BanditModel {
                    buckets: bm.buckets,
                    arms: bm.arms,
                    weights,
                    epsilon: bm.epsilon,
                    learning_rate: bm.learning_rate,
                })
            }
        };
        if meta.thresholds.len() != meta.task.n_classes() {
            return Err(TextError::Format("threshold count".into()));
        }
        Ok(Self {
            kind: meta.kind,
            task: meta.task,
            thresholds: meta.thresholds,
            training_log: meta.training_log,
            trained: Some(trained),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), TextError> {
        Ok(self.to_checkpoint()?.save(path)?)
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

fn as_f64(t: &[bool]) -> Vec<f64> {
    t.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

/// Macro F1 at threshold 0.5 of `scores` against `truth`.
fn f1_at_half(scores: &[Vec<f64>], truth: &[Vec<bool>]) -> f64 {
    let pred: Vec<Vec<bool>> = scores
        .iter()
        .map(|s| s.iter().map(|&p| p > 0.5).collect())
        .collect();
    per_class_counts(&pred, truth).map_or(0.0, |c| macro_f1(&c))
}

/// Trains one text detector; the epoch (or pass) with the best dev macro F1
/// is kept.
pub fn train_text_model(
    kind: ModelKind,
    task: TaskSpec,
    train: &[LabeledTextSample],
    dev: &[LabeledTextSample],
    config: &TextConfig,
) -> Result<TextModel, TextError> {
    if train.is_empty() {
        return Err(TextError::EmptyCorpus);
    }
    if dev.is_empty() {
        return Err(TextError::Net(NetError::EmptyData("dev")));
    }
    let exec = config.execution;
    let train_targets: Vec<Vec<bool>> = train.iter().map(|s| task.targets(&s.labels)).collect();
    let dev_targets: Vec<Vec<bool>> = dev.iter().map(|s| task.targets(&s.labels)).collect();
    let mut model = TextModel::untrained(kind, task);
    match kind {
        ModelKind::Tfidf => {
            let cfg = &config.tfidf;
            let texts: Vec<&str> = train.iter().map(|s| s.transcript.text.as_str()).collect();
            let vectorizer = TfidfVectorizer::fit(&texts, cfg.max_features, exec)?;
            let examples = |samples: &[LabeledTextSample], targets: &[Vec<bool>]| -> Vec<Example> {
                let inputs = par::map(exec, samples, |s| vectorizer.transform(&s.transcript.text));
                inputs
                    .into_iter()
                    .zip(targets)
                    .map(|(x, t)| Example {
                        input: Features::Sparse(x),
                        target: as_f64(t),
                    })
                    .collect()
            };
            let train_ex = examples(train, &train_targets);
            let dev_ex = examples(dev, &dev_targets);
            let loss = cfg.loss.bce_spec(train_ex.iter().map(|e| e.target.as_slice()));
            let head = TfidfModel::new_head(vectorizer.len(), cfg.hidden, task.n_classes(), config.seed)?;
            let tc = TrainConfig {
                seed: config.seed,
                execution: exec,
                ..cfg.train.clone()
            };
            let (head, history) = nncore::train(head, &train_ex, &dev_ex, &loss, &tc, |net, dev_set| {
                let scores: Vec<Vec<f64>> = par::map(exec, dev_set, |e| {
                    net.forward_input(e.input.as_input()).unwrap_or_default()
                });
                f1_at_half(&scores, &dev_targets)
            })?;
            model.training_log = history.epochs;
            model.trained = Some(TrainedText::Tfidf(TfidfModel { vectorizer, head }));
        }
        ModelKind::FastStyle => {
            let cfg = &config.faststyle;
            if cfg.epochs == 0 || !(cfg.learning_rate > 0.0) {
                return Err(TextError::Config("faststyle epochs and learning_rate must be positive".into()));
            }
            let mut m = FastStyleModel::init(cfg.buckets, cfg.dim, task.n_classes(), config.seed)?;
            m.downsample_ratio = cfg.downsample_ratio;
            let ids = par::map(exec, train, |s| hashed_ngrams(&s.transcript.text, cfg.buckets));
            let targets: Vec<Vec<f64>> = train_targets.iter().map(|t| as_f64(t)).collect();
            let any_pos: Vec<bool> = train_targets.iter().map(|t| t.iter().any(|&b| b)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xfa57);
            let per_epoch = match cfg.downsample_ratio {
                Some(r) => downsample(&any_pos, r, &mut rng.clone()).len(),
                None => train.len(),
            };
            let total = (cfg.epochs * per_epoch) as f64;
            let mut step = 0usize;
            let mut best: Option<(f64, FastStyleModel, usize)> = None;
            for epoch in 1..=cfg.epochs {
                let mut order = match cfg.downsample_ratio {
                    Some(r) => downsample(&any_pos, r, &mut rng),
                    None => (0..train.len()).collect(),
                };
                order.shuffle(&mut rng);
                let mut loss_sum = 0.0;
                for &i in &order {
                    let lr = cfg.learning_rate * (1.0 - step as f64 / total).max(0.0);
                    loss_sum += m.step(&ids[i], &targets[i], lr)?;
                    step += 1;
                }
                let train_loss = loss_sum / order.len() as f64;
                if !train_loss.is_finite() {
                    return Err(NetError::Divergence { epoch, loss: train_loss }.into());
                }
                let scores: Vec<Vec<f64>> = par::map(exec, dev, |s| m.scores(&s.transcript.text).unwrap_or_default());
                let dev_score = f1_at_half(&scores, &dev_targets);
                model.training_log.push(EpochRecord { epoch, train_loss, dev_score });
                if best.as_ref().is_none_or(|(b, _, _)| dev_score > *b) {
                    best = Some((dev_score, m.clone(), epoch));
                }
            }
            let (_, m, _) = best.expect("at least one epoch");
            model.trained = Some(TrainedText::FastStyle(m));
        }
        ModelKind::Bandit => {
            let cfg = &config.bandit;
            if !(0.0..=1.0).contains(&cfg.epsilon) {
                return Err(TextError::Config(format!("epsilon {} outside [0, 1]", cfg.epsilon)));
            }
            if cfg.passes == 0 || cfg.buckets == 0 || !(cfg.learning_rate > 0.0) {
                return Err(TextError::Config("bandit passes, buckets and learning_rate must be positive".into()));
            }
            let mut m = BanditModel::new(task.bandit_arms(), cfg);
            let policy = EpsilonGreedy { epsilon: cfg.epsilon };
            let feats = par::map(exec, train, |s| hashed_features(&s.transcript.text, cfg.buckets));
            let costs: Vec<Vec<f64>> = train_targets.iter().map(|t| task.arm_costs(t)).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xba4d);
            let mut order: Vec<usize> = (0..train.len()).collect();
            let mut best: Option<(f64, BanditModel)> = None;
            for pass in 1..=cfg.passes {
                order.shuffle(&mut rng);
                let mut incurred = 0.0;
                for &i in &order {
                    let x = &feats[i];
                    let probs = policy.probabilities(m.greedy(x), m.arms.len());
                    let a = sample_arm(&probs, &mut rng);
                    incurred += costs[i][a];
                    m.learn(x, a, costs[i][a], probs[a]);
                }
                let scores: Vec<Vec<f64>> = par::map(exec, dev, |s| {
                    task.bandit_scores(&m.predicted_costs(&m.features(&s.transcript.text)))
                });
                let dev_score = f1_at_half(&scores, &dev_targets);
                model.training_log.push(EpochRecord {
                    epoch: pass,
                    train_loss: incurred / train.len() as f64,
                    dev_score,
                });
                if best.as_ref().is_none_or(|(b, _)| dev_score > *b) {
                    best = Some((dev_score, m.clone()));
                }
            }
            model.trained = Some(TrainedText::Bandit(best.expect("at least one pass").1));
        }
    }
    if config.tune_thresholds {
        model.tune_thresholds(dev, exec)?;
    }
    Ok(model)
}
