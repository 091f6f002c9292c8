//! Corpus statistics and the DCW word score.
//!
//! Documents are tokenized into lowercase alphabetic tokens and scanned with
//! a sliding window. Each window counts a distinct word once, so every
//! probability here is a ratio of window counts:
//!
//! * `P(w) = windows containing w / total windows`
//! * `P(a, b) = windows containing both a and b / total windows`
//!
//! PMI is `ln(P(a,b) / (P(a) P(b)))`. Word vectors are positive-PMI rows of
//! the co-occurrence table, and the DCW score of a word against an anchor is
//! its PMI divided by the cosine of their vectors.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::artifact::{csv_string, fmt_f64, Provenance};
use crate::error::{Error, Result};

/// Cosine floor below which DCW is reported as undefined.
pub const COSINE_EPSILON: f64 = 1e-6;

pub const DEFAULT_WINDOW: usize = 10;

pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

/// One word per line; `#` starts a comment.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

/// Lowercased alphabetic runs; anything else separates tokens.
pub fn tokenize(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !stopwords.contains(t))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, stopwords: &HashSet<String>) -> Self {
        let text = text.into();
        let tokens = tokenize(&text, stopwords);
        Document {
            id: id.into(),
            text,
            tokens,
        }
    }

    pub fn from_tokens(id: impl Into<String>, tokens: &[&str]) -> Self {
        Document {
            id: id.into(),
            text: tokens.join(" "),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }
}

/// Reads every `.txt` file in `dir` (non-recursive), sorted by file name.
pub fn load_corpus_dir(dir: &Path, stopwords: &HashSet<String>) -> Result<Vec<Document>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|ext| ext == "txt") {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(Document::new(id, text, stopwords))
        })
        .collect()
}

/// Window counts over a corpus. Vocabulary is sorted, so the structure does
/// not depend on the order documents were ingested in.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceStats {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    unigram: Vec<u64>,
    /// Keyed by `(i, j)` with `i < j` in vocabulary order.
    pairs: BTreeMap<(usize, usize), u64>,
    total_windows: u64,
    window_size: usize,
}

#[derive(Default)]
struct RawCounts {
    unigram: HashMap<String, u64>,
    pairs: HashMap<(String, String), u64>,
    windows: u64,
}

impl RawCounts {
    fn from_doc(tokens: &[String], window: usize) -> Self {
        let mut raw = RawCounts::default();
        if tokens.is_empty() {
            return raw;
        }
        let n_windows = if tokens.len() <= window {
            1
        } else {
            tokens.len() - window + 1
        };
        for start in 0..n_windows {
            let end = (start + window).min(tokens.len());
            let distinct: BTreeSet<&str> = tokens[start..end].iter().map(String::as_str).collect();
            raw.windows += 1;
            let words: Vec<&str> = distinct.into_iter().collect();
            for (i, a) in words.iter().enumerate() {
                *raw.unigram.entry(a.to_string()).or_default() += 1;
                for b in &words[i + 1..] {
                    *raw.pairs.entry((a.to_string(), b.to_string())).or_default() += 1;
                }
            }
        }
        raw
    }

    fn merge(mut self, other: RawCounts) -> RawCounts {
        self.windows += other.windows;
        for (k, v) in other.unigram {
            *self.unigram.entry(k).or_default() += v;
        }
        for (k, v) in other.pairs {
            *self.pairs.entry(k).or_default() += v;
        }
        self
    }
}

impl CooccurrenceStats {
    pub fn build(docs: &[Document], window_size: usize) -> Result<Self> {
        if window_size < 2 {
            return Err(Error::invalid("window_size must be at least 2"));
        }
        let raw = count_documents(docs, window_size);
        if raw.windows == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut vocab: Vec<String> = raw.unigram.keys().cloned().collect();
        vocab.sort();
        let index: HashMap<String, usize> =
            vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let unigram = vocab.iter().map(|w| raw.unigram[w]).collect();
        let pairs = raw
            .pairs
            .into_iter()
            .map(|((a, b), c)| {
                let (i, j) = (index[&a], index[&b]);
                ((i.min(j), i.max(j)), c)
            })
            .collect();
        Ok(CooccurrenceStats {
            vocab,
            index,
            unigram,
            pairs,
            total_windows: raw.windows,
            window_size,
        })
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn total_windows(&self) -> u64 {
        self.total_windows
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn contains(&self, w: &str) -> bool {
        self.index.contains_key(w)
    }

    fn idx(&self, w: &str) -> Result<usize> {
        self.index
            .get(w)
            .copied()
            .ok_or_else(|| Error::OutOfVocabulary(w.to_string()))
    }

    pub fn unigram_windows(&self, w: &str) -> Result<u64> {
        Ok(self.unigram[self.idx(w)?])
    }

    /// Unordered pair count; a word never pairs with itself.
    pub fn pair_windows(&self, a: &str, b: &str) -> Result<u64> {
        let (i, j) = (self.idx(a)?, self.idx(b)?);
        Ok(self.pair_count(i, j))
    }

    fn pair_count(&self, i: usize, j: usize) -> u64 {
        if i == j {
            return 0;
        }
        self.pairs.get(&(i.min(j), i.max(j))).copied().unwrap_or(0)
    }

    /// Iterates `(a, b, count)` with `a < b`.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.pairs
            .iter()
            .map(|(&(i, j), &c)| (self.vocab[i].as_str(), self.vocab[j].as_str(), c))
    }

    fn pmi_idx(&self, i: usize, j: usize) -> Option<f64> {
        let joint = self.pair_count(i, j);
        if joint == 0 {
            return None;
        }
        let total = self.total_windows as f64;
        let ratio = (joint as f64 * total) / (self.unigram[i] as f64 * self.unigram[j] as f64);
        Some(ratio.ln())
    }

    /// Natural-log PMI. Symmetric in its arguments.
    pub fn pmi(&self, a: &str, b: &str) -> Result<f64> {
        let (i, j) = (self.idx(a)?, self.idx(b)?);
        self.pmi_idx(i, j)
            .ok_or_else(|| Error::NoCooccurrence(a.to_string(), b.to_string()))
    }

    /// Corpus-level mutual information `sum p(a,b) * pmi(a,b)` over observed
    /// pairs. Diagnostic only; ranking uses PMI directly.
    pub fn mutual_information(&self) -> f64 {
        let total = self.total_windows as f64;
        self.pairs
            .iter()
            .map(|(&(i, j), &c)| c as f64 / total * self.pmi_idx(i, j).unwrap_or(0.0))
            .sum()
    }

    fn vector_idx(&self, i: usize) -> Vec<f64> {
        (0..self.vocab.len())
            .map(|j| self.pmi_idx(i, j).map_or(0.0, |p| p.max(0.0)))
            .collect()
    }

    /// Positive-PMI row of `w` over the vocabulary.
    pub fn word_vector(&self, w: &str) -> Result<WordVector> {
        let i = self.idx(w)?;
        Ok(WordVector {
            word: w.to_string(),
            values: self.vector_idx(i),
        })
    }

    pub fn dcw_score(&self, anchor: &str, word: &str) -> Result<f64> {
        let pmi = self.pmi(anchor, word)?;
        let cos = cosine(&self.word_vector(anchor)?, &self.word_vector(word)?).unwrap_or(0.0);
        dcw_ratio(pmi, cos).map_err(|_| Error::UndefinedDcw(anchor.to_string(), word.to_string()))
    }

    /// Scores every other vocabulary word against `anchor`. Words with no
    /// co-occurrence or a cosine at or below [`COSINE_EPSILON`] are left out
    /// and counted in `skipped`.
    pub fn rank_features(&self, anchor: &str, threshold: f64) -> Result<DcwRanking> {
        let a = self.idx(anchor)?;
        let anchor_vec = self.vector_idx(a);
        let anchor_norm = norm(&anchor_vec);
        let mut entries = Vec::new();
        let mut skipped = 0;
        for (j, word) in self.vocab.iter().enumerate() {
            if j == a {
                continue;
            }
            let Some(pmi) = self.pmi_idx(a, j) else {
                skipped += 1;
                continue;
            };
            let v = self.vector_idx(j);
            let n = norm(&v);
            let cos = if anchor_norm == 0.0 || n == 0.0 {
                0.0
            } else {
                dot(&anchor_vec, &v) / (anchor_norm * n)
            };
            match dcw_ratio(pmi, cos) {
                Ok(dcw) => entries.push(DcwEntry {
                    word: word.clone(),
                    pmi,
                    cosine: cos,
                    dcw,
                    kept: dcw > threshold,
                }),
                Err(_) => skipped += 1,
            }
        }
        entries.sort_by(|x, y| y.dcw.total_cmp(&x.dcw).then_with(|| x.word.cmp(&y.word)));
        Ok(DcwRanking {
            anchor: anchor.to_string(),
            entries,
            threshold,
            skipped,
        })
    }
}

#[cfg(feature = "parallel")]
fn count_documents(docs: &[Document], window: usize) -> RawCounts {
    use rayon::prelude::*;
    docs.par_iter()
        .map(|d| RawCounts::from_doc(&d.tokens, window))
        .reduce(RawCounts::default, RawCounts::merge)
}

#[cfg(not(feature = "parallel"))]
fn count_documents(docs: &[Document], window: usize) -> RawCounts {
    docs.iter()
        .map(|d| RawCounts::from_doc(&d.tokens, window))
        .fold(RawCounts::default(), RawCounts::merge)
}

pub fn build_stats(docs: &[Document], window_size: usize) -> Result<CooccurrenceStats> {
    CooccurrenceStats::build(docs, window_size)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordVector {
    pub word: String,
    pub values: Vec<f64>,
}

impl WordVector {
    pub fn new(word: impl Into<String>, values: Vec<f64>) -> Self {
        WordVector {
            word: word.into(),
            values,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine(v1: &WordVector, v2: &WordVector) -> Result<f64> {
    if v1.values.len() != v2.values.len() {
        return Err(Error::invalid("word vectors differ in length"));
    }
    let (n1, n2) = (norm(&v1.values), norm(&v2.values));
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot(&v1.values, &v2.values) / (n1 * n2))
}

/// `pmi / cosine`, undefined when the cosine is at or below the floor.
pub fn dcw_ratio(pmi: f64, cosine: f64) -> Result<f64> {
    if cosine <= COSINE_EPSILON {
        return Err(Error::invalid("cosine below floor"));
    }
    Ok(pmi / cosine)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcwEntry {
    pub word: String,
    pub pmi: f64,
    pub cosine: f64,
    pub dcw: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcwRanking {
    pub anchor: String,
    pub entries: Vec<DcwEntry>,
    pub threshold: f64,
    /// Words omitted because their DCW is undefined.
    pub skipped: usize,
}

impl DcwRanking {
    pub fn kept(&self) -> impl Iterator<Item = &DcwEntry> {
        self.entries.iter().filter(|e| e.kept)
    }

    /// `word,pmi,cosine,dcw,kept`. Dropped words show `—` in the kept column.
    pub fn to_csv(&self, prov: &Provenance) -> Result<String> {
        csv_string(prov, |w| {
            w.write_record(["word", "pmi", "cosine", "dcw", "kept"])?;
            for e in &self.entries {
                w.write_record([
                    e.word.clone(),
                    fmt_f64(e.pmi),
                    fmt_f64(e.cosine),
                    fmt_f64(e.dcw),
                    if e.kept { "yes".into() } else { "—".into() },
                ])?;
            }
            Ok(())
        })
    }
}
