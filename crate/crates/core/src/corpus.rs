//! Documents, tokenization, vocabularies, train/test splits and the synthetic
//! corpus generator.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::util;
use crate::{Error, Result};

mod synthetic;

pub use synthetic::{generate_synthetic, GeneratorConfig, COMMERCE_PREFIX, GENERAL_PREFIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Positive,
    Negative,
    Unknown,
}

impl Label {
    pub fn from_code(code: Option<u8>) -> Result<Self> {
        match code {
            Some(1) => Ok(Label::Positive),
            Some(0) => Ok(Label::Negative),
            None => Ok(Label::Unknown),
            Some(other) => Err(Error::Format(format!("label must be 0, 1 or null, got {other}"))),
        }
    }

    pub fn code(self) -> Option<u8> {
        match self {
            Label::Positive => Some(1),
            Label::Negative => Some(0),
            Label::Unknown => None,
        }
    }

    pub fn is_labeled(self) -> bool {
        self != Label::Unknown
    }

    /// Class index used by the classifiers: 1 for positive, 0 for negative.
    pub fn class_index(self) -> Option<usize> {
        self.code().map(usize::from)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub label: Label,
    pub text: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, label: Label, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            label,
            text: text.into(),
            tokens: Vec::new(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DocumentRecord {
    id: String,
    label: Option<u8>,
    text: String,
}

/// Ordered collection of documents with unique, non-empty ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if doc.id.is_empty() {
                return Err(Error::invalid("document id must be non-empty"));
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::invalid(format!("duplicate document id '{}'", doc.id)));
            }
        }
        Ok(Corpus { documents })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Fraction of positives among labeled documents; `None` without labels.
    pub fn positive_rate(&self) -> Option<f64> {
        let labeled = self.documents.iter().filter(|d| d.label.is_labeled()).count();
        if labeled == 0 {
            return None;
        }
        let positives = self
            .documents
            .iter()
            .filter(|d| d.label == Label::Positive)
            .count();
        Some(positives as f64 / labeled as f64)
    }

    pub fn tokenize_all(&mut self, stopwords: Option<&HashSet<String>>) {
        for doc in &mut self.documents {
            doc.tokens = tokenize(&doc.text, stopwords);
        }
    }

    pub fn from_jsonl_str(src: &str, path: &Path) -> Result<Self> {
        let mut docs = Vec::new();
        for (i, line) in src.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: DocumentRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            let label = Label::from_code(rec.label).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            docs.push(Document::new(rec.id, label, rec.text));
        }
        Corpus::new(docs)
    }

    /// Reads a JSON Lines corpus. Documents come back untokenized.
    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let src = util::read_to_string(path)?;
        Corpus::from_jsonl_str(&src, path)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            let rec = DocumentRecord {
                id: doc.id.clone(),
                label: doc.label.code(),
                text: doc.text.clone(),
            };
            // serializing a plain struct of strings and integers cannot fail
            let line = serde_json::to_string(&rec).expect("serialize document");
            let _ = writeln!(out, "{line}");
        }
        out
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        util::write_file(path, self.to_jsonl().as_bytes())
    }

    /// SHA-256 over the JSON Lines serialization.
    pub fn checksum(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_jsonl().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Lowercases, splits on every maximal run of non-alphanumeric characters and
/// drops tokens shorter than two characters and stopwords.
pub fn tokenize(text: &str, stopwords: Option<&HashSet<String>>) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .filter(|t| stopwords.is_none_or(|s| !s.contains(*t)))
        .map(str::to_owned)
        .collect()
}

/// Reads a stopword file: one word per line, `#` comments and blank lines
/// ignored. Words are lowercased.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let src = util::read_to_string(path)?;
    Ok(src
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}

/// Word index with corpus counts. Index order is descending count with
/// lexicographic tie-break, so index 0 is the most frequent word.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from `(word, count)` pairs, keeping the counts
    /// at or above `min_count`.
    pub fn from_counts<I, S>(counts: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut entries: Vec<(String, u64)> = counts
            .into_iter()
            .map(|(w, c)| (w.into(), c))
            .filter(|(_, c)| *c >= min_count && *c > 0)
            .collect();
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let (words, counts) = entries.into_iter().unzip();
        Ok(Vocabulary {
            words,
            counts,
            index,
            min_count,
        })
    }

    /// Vocabulary in a fixed word order with unknown counts, as read back
    /// from an embedding file.
    pub fn from_ordered_words(words: Vec<String>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate vocabulary word '{w}'")));
            }
        }
        let counts = vec![0; words.len()];
        Ok(Vocabulary {
            words,
            counts,
            index,
            min_count: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }
}

pub fn build_vocabulary(corpus: &Corpus, min_count: u64) -> Result<Vocabulary> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for doc in corpus.documents() {
        for tok in &doc.tokens {
            *counts.entry(tok.as_str()).or_insert(0) += 1;
        }
    }
    Vocabulary::from_counts(counts, min_count)
}

/// Number of test documents for a split: the fractional part of
/// `test_fraction * n` rounds up at one half.
pub fn test_split_size(n: usize, test_fraction: f64) -> usize {
    let exact = test_fraction * n as f64;
    let floor = exact.floor();
    floor as usize + usize::from(exact - floor >= 0.5)
}

/// Seeded random split. Both halves keep the input's relative document order.
pub fn split_corpus(corpus: &Corpus, test_fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = corpus.len();
    let n_test = test_split_size(n, test_fraction);
    if n_test == 0 || n_test == n {
        return Err(Error::invalid(format!(
            "split of {n} documents at fraction {test_fraction} leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut util::rng(seed));
    let mut in_test = vec![false; n];
    for &i in &order[..n_test] {
        in_test[i] = true;
    }
    let (mut train, mut test) = (Vec::with_capacity(n - n_test), Vec::with_capacity(n_test));
    for (doc, &t) in corpus.documents.iter().zip(&in_test) {
        if t {
            test.push(doc.clone());
        } else {
            train.push(doc.clone());
        }
    }
    Ok((Corpus { documents: train }, Corpus { documents: test }))
}
