use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use didactic_core::labeling::LabelPolicy;
use didactic_core::nncore::{LossVariant, TrainConfig};
use didactic_core::splitting::GroupBy;
use didactic_core::textmodels::{ModelKind, TaskKind};
use didactic_core::Execution;

use crate::config::{parse_fractions, Fractions, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "didactic", version, about = "Lecture didactic-feature detection pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a dataset manifest with its annotation, transcript and embedding files
    Ingest(IngestArgs),
    /// Write a deterministic synthetic corpus with a manifest
    Synth(SynthArgs),
    /// Label transcript events and select visual frames
    Label(LabelArgs),
    /// Group-atomic train/dev/test splits
    Split(SplitArgs),
    /// Per-split dataset statistics
    Stats(StatsArgs),
    /// Train a text detector
    TrainText(TextArgs),
    /// Train the two-view frame classifier over repeated seeds
    TrainMtl(MtlArgs),
    /// Evaluate a trained text detector on the test split
    Eval(EvalArgs),
    /// Learning curve over nested training fractions
    Curve(CurveArgs),
    /// Collect evaluation artifacts into one report
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Union,
    Majority,
}

impl From<PolicyArg> for LabelPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Union => LabelPolicy::Union,
            PolicyArg::Majority => LabelPolicy::Majority,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Questions,
    Full,
}

impl From<TaskArg> for TaskKind {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Questions => TaskKind::QuestionsOnly,
            TaskArg::Full => TaskKind::FullText,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Tfidf,
    Faststyle,
    Bandit,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Tfidf => ModelKind::Tfidf,
            ModelArg::Faststyle => ModelKind::FastStyle,
            ModelArg::Bandit => ModelKind::Bandit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Plain,
    Weighted,
}

impl From<LossArg> for LossVariant {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Plain => LossVariant::Plain,
            LossArg::Weighted => LossVariant::Weighted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupArg {
    Observer,
    Series,
}

impl From<GroupArg> for GroupBy {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Observer => GroupBy::Observer,
            GroupArg::Series => GroupBy::Series,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExecArg {
    Parallel,
    Sequential,
}

impl From<ExecArg> for Execution {
    fn from(e: ExecArg) -> Self {
        match e {
            ExecArg::Parallel => Execution::Parallel,
            ExecArg::Sequential => Execution::Sequential,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output root; each stage writes into its own subdirectory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ExecArg::Parallel)]
    pub execution: ExecArg,
}

impl Common {
    pub fn config(&self) -> PipelineConfig {
        PipelineConfig {
            out: self.out.clone(),
            execution: self.execution.into(),
            ..PipelineConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dataset manifest (JSON)
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 40)]
    pub lectures: usize,
    /// Transcript events per lecture
    #[arg(long, default_value_t = 250)]
    pub events: usize,
    /// Visual state events per lecture
    #[arg(long, default_value_t = 20)]
    pub visual_events: usize,
    /// Embedding dimension of the planted frame vectors
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// Length of each planted concept direction
    #[arg(long, default_value_t = 3.0)]
    pub amplitude: f64,
    /// Standard deviation of per-coordinate embedding noise
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
}

#[derive(Debug, Clone, Args)]
pub struct LabelArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = PolicyArg::Union)]
    pub policy: PolicyArg,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Group key of the text split; frames are always grouped by series
    #[arg(long, value_enum, default_value_t = GroupArg::Observer)]
    pub group_by: GroupArg,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ModelSel {
    #[arg(long, value_enum, default_value_t = ModelArg::Tfidf)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = TaskArg::Questions)]
    pub task: TaskArg,
}

impl ModelSel {
    pub fn dir_name(&self) -> String {
        let m: ModelKind = self.model.into();
        let t = didactic_core::textmodels::TaskSpec { kind: self.task.into() };
        format!("{}-{}", m.name(), t.name())
    }
}

#[derive(Debug, Clone, Args)]
pub struct TextArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub sel: ModelSel,
    #[arg(long, value_enum, default_value_t = LossArg::Weighted)]
    pub loss: LossArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pick per-class decision thresholds on dev
    #[arg(long, default_value_t = false)]
    pub tune_thresholds: bool,
}

impl TextArgs {
    pub fn config(&self) -> PipelineConfig {
        PipelineConfig {
            model: self.sel.model.into(),
            task: self.sel.task.into(),
            loss: self.loss.into(),
            seed: self.seed,
            ..self.common.config()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub sel: ModelSel,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub text: TextArgs,
    /// Training fractions: a list `0.1,0.5,1`, or a range `A..B` with step 0.1 or `A..B:STEP`
    #[arg(long, default_value = "0.1..1.0", value_parser = parse_fractions)]
    pub fractions: Fractions,
}

#[derive(Debug, Clone, Args)]
pub struct MtlArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent training runs with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, value_enum, default_value_t = LossArg::Weighted)]
    pub loss: LossArg,
    /// Encoder layer widths, comma separated
    #[arg(long, default_value = "256,256,256", value_delimiter = ',')]
    pub encoder_dims: Vec<usize>,
    /// Classifier hidden width; 0 for a single layer
    #[arg(long, default_value_t = 128)]
    pub classifier_hidden: usize,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub learning_rate: f64,
}

impl MtlArgs {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            max_epochs: self.epochs,
            early_stop_patience: 5,
            repeats: self.repeats,
            seed: self.seed,
            execution: self.common.execution.into(),
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
}
