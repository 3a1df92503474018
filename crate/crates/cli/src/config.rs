use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use didactic_core::labeling::LabelPolicy;
use didactic_core::nncore::{LossVariant, TrainConfig};
use didactic_core::splitting::GroupBy;
use didactic_core::textmodels::{ModelKind, TaskKind};
use didactic_core::Execution;

use crate::error::CliError;

/// Resolved settings of one invocation; recorded in every stage manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub manifest: Option<PathBuf>,
    pub out: PathBuf,
    pub task: TaskKind,
    pub model: ModelKind,
    pub policy: LabelPolicy,
    pub loss: LossVariant,
    pub group_by: GroupBy,
    pub seed: u64,
    pub train: TrainConfig,
    pub fractions: Vec<f64>,
    pub execution: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            out: PathBuf::from("out"),
            task: TaskKind::QuestionsOnly,
            model: ModelKind::Tfidf,
            policy: LabelPolicy::Union,
            loss: LossVariant::Weighted,
            group_by: GroupBy::Observer,
            seed: 0,
            train: TrainConfig::default(),
            fractions: didactic_core::evaluation::default_fractions(),
            execution: Execution::default(),
        }
    }
}

impl PipelineConfig {
    pub fn to_json(&self) -> Result<String, CliError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        Ok(std::fs::write(path, self.to_json()? + "\n")?)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let s = std::fs::read_to_string(path)
            .map_err(|_| CliError::MissingInput(format!("config {} not found", path.display())))?;
        Self::from_json(&s)
    }

    /// Referenced input paths must exist.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(m) = &self.manifest {
            if !m.is_file() {
                return Err(CliError::MissingInput(format!("manifest {} not found", m.display())));
            }
        }
        if self.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(CliError::Usage(format!("fractions must lie in (0, 1]: {:?}", self.fractions)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fractions(pub Vec<f64>);

/// Parses `0.1,0.5,1.0`, `A..B` (step 0.1) or `A..B:STEP`.
pub fn parse_fractions(s: &str) -> Result<Fractions, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad fraction `{t}`"));
    let out = if let Some((a, rest)) = s.split_once("..") {
        let (b, step) = match rest.split_once(':') {
            Some((b, st)) => (parse(b)?, parse(st)?),
            None => (parse(rest)?, 0.1),
        };
        let a = parse(a)?;
        if !(step > 0.0) || b < a {
            return Err(format!("bad fraction range `{s}`"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        (0..=n).map(|k| ((a + k as f64 * step) * 1e9).round() / 1e9).collect()
    } else {
        s.split(',').map(parse).collect::<Result<Vec<_>, _>>()?
    };
    if out.is_empty() || out.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(format!("fractions must lie in (0, 1]: `{s}`"));
    }
    Ok(Fractions(out))
}
