use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::tokenize::{ngrams, normalize, tokenize};
use super::TextError;
use crate::nncore::{Activation, DenseNet, Input};
use crate::par::{self, Execution};

pub const DEFAULT_VOCABULARY: usize = 10_000;

/// Unigram and bigram TF-IDF features over a vocabulary fitted on training
/// documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfVectorizer {
    /// N-gram to column index; columns follow lexicographic n-gram order.
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
}

impl TfidfVectorizer {
    /// Keeps the `max_features` n-grams with the highest document frequency,
    /// ties broken lexicographically. `idf = ln((1 + N) / (1 + df)) + 1`.
    pub fn fit<S: AsRef<str> + Sync>(
        docs: &[S],
        max_features: usize,
        exec: Execution,
    ) -> Result<Self, TextError> {
        if docs.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        let partial = par::map_chunks(exec, docs, 256, |chunk| {
            let mut df: HashMap<String, usize> = HashMap::new();
            for d in chunk {
                let uniq: HashSet<String> = ngrams(&tokenize(d.as_ref())).into_iter().collect();
                for g in uniq {
                    *df.entry(g).or_insert(0) += 1;
                }
            }
            df
        });
        let mut df: HashMap<String, usize> = HashMap::new();
        for p in partial {
            for (g, c) in p {
                *df.entry(g).or_insert(0) += c;
            }
        }
        let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(max_features);
        ranked.sort_by(|a, b| a.0.cmp(&b.0));
        let n = docs.len() as f64;
        let idf = ranked
            .iter()
            .map(|(_, d)| ((1.0 + n) / (1.0 + *d as f64)).ln() + 1.0)
            .collect();
        let vocabulary = ranked
            .into_iter()
            .enumerate()
            .map(|(i, (g, _))| (g, i))
            .collect();
        Ok(Self { vocabulary, idf })
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    /// Sparse L2-normalized vector sorted by column. Unknown n-grams are
    /// ignored; a document with none in the vocabulary maps to the empty vector.
    pub fn transform(&self, text: &str) -> Vec<(usize, f64)> {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for g in ngrams(&tokenize(text)) {
            if let Some(&i) = self.vocabulary.get(&g) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut v: Vec<(usize, f64)> = counts.into_iter().map(|(i, c)| (i, c * self.idf[i])).collect();
        normalize(&mut v);
        v
    }

    /// `index\tngram` lines in column order.
    pub fn vocabulary_table(&self) -> String {
        let mut s = String::new();
        for (g, i) in &self.vocabulary {
            s.push_str(&format!("{i}\t{g}\n"));
        }
        s
    }

    pub fn from_table(table: &str, idf: Vec<f64>) -> Result<Self, TextError> {
        let mut vocabulary = BTreeMap::new();
        for line in table.lines() {
            let (i, g) = line
                .split_once('\t')
                .ok_or_else(|| TextError::Format(format!("bad vocabulary line {line:?}")))?;
            let i: usize = i
                .parse()
                .map_err(|_| TextError::Format(format!("bad vocabulary index {i:?}")))?;
            if i >= idf.len() {
                return Err(TextError::Format(format!("vocabulary index {i} out of range")));
            }
            vocabulary.insert(g.to_owned(), i);
        }
        if vocabulary.len() != idf.len() {
            return Err(TextError::Format("vocabulary and idf sizes differ".into()));
        }
        Ok(Self { vocabulary, idf })
    }
}

/// TF-IDF features followed by a dense sigmoid head.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    pub vectorizer: TfidfVectorizer,
    pub head: DenseNet,
}

impl TfidfModel {
    pub fn new_head(
        vocab: usize,
        hidden: Option<usize>,
        classes: usize,
        seed: u64,
    ) -> Result<DenseNet, TextError> {
        let net = match hidden {
            Some(h) => DenseNet::mlp(vocab, &[h], classes, Activation::LeakyRelu, Activation::Sigmoid, seed)?,
            None => DenseNet::new(&[vocab, classes], &[Activation::Sigmoid], seed)?,
        };
        Ok(net)
    }

    pub fn scores(&self, text: &str) -> Result<Vec<f64>, TextError> {
        let x = self.vectorizer.transform(text);
        Ok(self.head.forward_input(Input::Sparse(&x))?)
    }
}
