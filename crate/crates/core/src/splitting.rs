//! Group-atomic train/dev/test splits and per-split dataset statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{FeatureId, LectureId, Observation};
use crate::labeling::LabeledTextSample;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("{found} groups cannot populate three splits")]
    TooFewGroups { found: usize },
    #[error("split ratios must be positive and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),
    #[error("{0:?} split is empty")]
    EmptySplit(Split),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Observer,
    Series,
}

pub const DEFAULT_RATIOS: [f64; 3] = [0.70, 0.15, 0.15];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub group_by: GroupBy,
    pub seed: u64,
    pub ratios: [f64; 3],
    pub assignment: BTreeMap<String, Split>,
    /// Samples per split, in train/dev/test order.
    pub sample_counts: [usize; 3],
    /// Realized sample fractions, in train/dev/test order.
    pub realized: [f64; 3],
}

impl SplitManifest {
    pub fn split_of(&self, group: &str) -> Option<Split> {
        self.assignment.get(group).copied()
    }

    pub fn groups_in(&self, split: Split) -> impl Iterator<Item = &str> {
        self.assignment
            .iter()
            .filter(move |(_, s)| **s == split)
            .map(|(g, _)| g.as_str())
    }
}

/// Assigns whole groups to splits.
///
/// Groups are put in key order, shuffled by `seed`, then each goes to the
/// split with the largest sample deficit against its target. When the groups
/// left are only just enough to give every still-empty split one group, they
/// go to the empty splits. Ties resolve in train/dev/test order.
pub fn split_groups(
    group_sizes: &BTreeMap<String, usize>,
    group_by: GroupBy,
    ratios: [f64; 3],
    seed: u64,
) -> Result<SplitManifest, SplitError> {
    if ratios.iter().any(|r| !(*r > 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(SplitError::InvalidRatios(ratios));
    }
    if group_sizes.len() < 3 {
        return Err(SplitError::TooFewGroups {
            found: group_sizes.len(),
        });
    }
    let mut groups: Vec<(&String, usize)> = group_sizes.iter().map(|(g, &n)| (g, n)).collect();
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let total: usize = groups.iter().map(|(_, n)| n).sum();

    let mut counts = [0usize; 3];
    let mut n_groups = [0usize; 3];
    let mut assignment = BTreeMap::new();
    for (i, (g, n)) in groups.iter().enumerate() {
        let remaining = groups.len() - i;
        let empty: Vec<usize> = (0..3).filter(|&s| n_groups[s] == 0).collect();
        let deficit = |s: usize| ratios[s] * total as f64 - counts[s] as f64;
        let candidates: Vec<usize> = if remaining <= empty.len() {
            empty
        } else {
            (0..3).collect()
        };
        let target = candidates
            .iter()
            .copied()
            .fold(None::<usize>, |best, s| match best {
                Some(b) if deficit(b) >= deficit(s) => Some(b),
                _ => Some(s),
            })
            .expect("at least one candidate");
        counts[target] += n;
        n_groups[target] += 1;
        assignment.insert((*g).clone(), Split::ALL[target]);
    }

    let realized = counts.map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 });
    Ok(SplitManifest {
        group_by,
        seed,
        ratios,
        assignment,
        sample_counts: counts,
        realized,
    })
}

/// Convenience wrapper that counts samples per group key first.
pub fn split<T>(
    samples: &[T],
    key: impl Fn(&T) -> String,
    group_by: GroupBy,
    ratios: [f64; 3],
    seed: u64,
) -> Result<SplitManifest, SplitError> {
    let mut sizes: BTreeMap<String, usize> = BTreeMap::new();
    for s in samples {
        *sizes.entry(key(s)).or_default() += 1;
    }
    split_groups(&sizes, group_by, ratios, seed)
}

/// Observer grouping key per lecture.
///
/// Lectures that share any observer are connected; each connected component
/// of the lecture/observer graph is one group, named by its smallest observer
/// id. Splitting by this key keeps all lectures of any one observer together.
pub fn observer_groups(observations: &[Observation]) -> BTreeMap<LectureId, String> {
    let mut observers: BTreeMap<&str, usize> = BTreeMap::new();
    let mut lectures: BTreeMap<&LectureId, Vec<usize>> = BTreeMap::new();
    for o in observations {
        let n = observers.len();
        let idx = *observers.entry(o.observer_id.as_str()).or_insert(n);
        lectures.entry(&o.lecture_id).or_default().push(idx);
    }
    let names: Vec<&str> = {
        let mut v = vec![""; observers.len()];
        for (name, &i) in &observers {
            v[i] = name;
        }
        v
    };
    let mut parent: Vec<usize> = (0..observers.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for obs in lectures.values() {
        for w in obs.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                // keep the lexicographically smaller name as root
                if names[a] <= names[b] {
                    parent[b] = a;
                } else {
                    parent[a] = b;
                }
            }
        }
    }
    lectures
        .into_iter()
        .map(|(l, obs)| {
            let root = find(&mut parent, obs[0]);
            (l.clone(), names[root].to_owned())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub split: Split,
    pub n_samples: usize,
    pub mean_sentences: f64,
    pub mean_duration_s: f64,
    /// Percentage of samples carrying each text feature.
    pub positive_pct: BTreeMap<FeatureId, f64>,
    /// Percentage of samples carrying AQ or GQ.
    pub question_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub splits: Vec<SplitStats>,
}

fn pct(k: usize, n: usize) -> f64 {
    100.0 * k as f64 / n as f64
}

pub fn compute_split_stats(
    split: Split,
    samples: &[LabeledTextSample],
) -> Result<SplitStats, SplitError> {
    if samples.is_empty() {
        return Err(SplitError::EmptySplit(split));
    }
    let n = samples.len();
    let mean_sentences =
        samples.iter().map(|s| s.transcript.sentence_count as f64).sum::<f64>() / n as f64;
    let mean_duration_s =
        samples.iter().map(|s| s.transcript.span.duration()).sum::<f64>() / n as f64;
    let positive_pct = FeatureId::TEXT
        .iter()
        .map(|&f| (f, pct(samples.iter().filter(|s| s.labels.contains(&f)).count(), n)))
        .collect();
    let question_pct = pct(samples.iter().filter(|s| s.has_question()).count(), n);
    Ok(SplitStats {
        split,
        n_samples: n,
        mean_sentences,
        mean_duration_s,
        positive_pct,
        question_pct,
    })
}

pub fn compute_stats(
    train: &[LabeledTextSample],
    dev: &[LabeledTextSample],
    test: &[LabeledTextSample],
) -> Result<DatasetStats, SplitError> {
    Ok(DatasetStats {
        splits: vec![
            compute_split_stats(Split::Train, train)?,
            compute_split_stats(Split::Dev, dev)?,
            compute_split_stats(Split::Test, test)?,
        ],
    })
}

impl DatasetStats {
    /// Aligned text table: one row per statistic, one column per split.
    pub fn render_table(&self) -> String {
        let mut rows: Vec<(String, Vec<String>)> = vec![
            (
                "Samples".into(),
                self.splits.iter().map(|s| s.n_samples.to_string()).collect(),
            ),
            (
                "Mean length of an event (number of sentences)".into(),
                self.splits.iter().map(|s| format!("{:.2}", s.mean_sentences)).collect(),
            ),
            (
                "Mean duration of an event".into(),
                self.splits.iter().map(|s| format!("{:.2}s", s.mean_duration_s)).collect(),
            ),
        ];
        for f in FeatureId::TEXT {
            rows.push((
                format!("{} ({})", f.description(), f.code()),
                self.splits
                    .iter()
                    .map(|s| format!("{:.2}%", s.positive_pct[&f]))
                    .collect(),
            ));
        }
        rows.push((
            "Sum of AQ and GQ behaviors".into(),
            self.splits.iter().map(|s| format!("{:.2}%", s.question_pct)).collect(),
        ));

        let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let col_w = rows
            .iter()
            .flat_map(|(_, v)| v.iter().map(String::len))
            .max()
            .unwrap_or(0)
            .max(5);
        let mut out = String::new();
        let _ = write!(out, "{:label_w$}", "");
        for s in &self.splits {
            let _ = write!(out, "  {:>col_w$}", s.split.name());
        }
        out.push('\n');
        for (label, vals) in rows {
            let _ = write!(out, "{label:label_w$}");
            for v in vals {
                let _ = write!(out, "  {v:>col_w$}");
            }
            out.push('\n');
        }
        out
    }
}
