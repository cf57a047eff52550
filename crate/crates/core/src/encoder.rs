//! Numeric encodings: sentence matrices for the Conv1D classifier and the
//! bag-of-words term-document matrices of the baseline.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};
use crate::embedding::EmbeddingModel;
use crate::segmenter::Segment;
use crate::util;
use crate::{Error, Result};

/// A `(2k+1) x d` matrix whose row `i` is the embedding of token `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major values.
    pub values: Vec<f64>,
    pub doc_id: String,
    pub label: Label,
}

impl SentenceMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }
}

pub fn sentence_matrix(segment: &Segment, model: &EmbeddingModel) -> SentenceMatrix {
    let cols = model.dim();
    let mut values = Vec::with_capacity(segment.tokens.len() * cols);
    for tok in &segment.tokens {
        values.extend_from_slice(model.lookup(tok));
    }
    SentenceMatrix {
        rows: segment.tokens.len(),
        cols,
        values,
        doc_id: segment.doc_id.clone(),
        label: segment.label,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TdmScheme {
    Binary,
    Frequency,
    Tfidf,
}

impl std::str::FromStr for TdmScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(TdmScheme::Binary),
            "frequency" => Ok(TdmScheme::Frequency),
            "tfidf" => Ok(TdmScheme::Tfidf),
            other => Err(Error::invalid(format!("unknown TDM scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for TdmScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TdmScheme::Binary => "binary",
            TdmScheme::Frequency => "frequency",
            TdmScheme::Tfidf => "tfidf",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tdm {
    pub doc_ids: Vec<String>,
    pub terms: Vec<String>,
    /// One row per document, one column per term.
    pub scores: Vec<Vec<f64>>,
    pub scheme: TdmScheme,
}

impl Tdm {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("doc_id");
        for t in &self.terms {
            let _ = write!(out, ",{t}");
        }
        out.push('\n');
        for (id, row) in self.doc_ids.iter().zip(&self.scores) {
            out.push_str(id);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        util::write_file(path, self.to_csv().as_bytes())
    }
}

/// Term selection and document frequencies fitted on one corpus, reusable
/// to encode another corpus over the same columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TdmVocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

impl TdmVocabulary {
    /// Keeps the `max_terms` most frequent terms (ties lexicographic).
    pub fn fit(corpus: &Corpus, max_terms: usize) -> Result<Self> {
        let mut total: HashMap<&str, u64> = HashMap::new();
        for doc in corpus.documents() {
            for t in &doc.tokens {
                *total.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, u64)> = total.into_iter().collect();
        if ranked.is_empty() || max_terms == 0 {
            return Err(Error::invalid("term-document matrix needs at least one term"));
        }
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_terms);
        let terms: Vec<String> = ranked.into_iter().map(|(t, _)| t.to_string()).collect();
        let index: HashMap<String, usize> = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let mut doc_freq = vec![0; terms.len()];
        for doc in corpus.documents() {
            let mut seen = vec![false; terms.len()];
            for t in &doc.tokens {
                if let Some(&j) = index.get(t) {
                    if !seen[j] {
                        seen[j] = true;
                        doc_freq[j] += 1;
                    }
                }
            }
        }
        Ok(TdmVocabulary {
            terms,
            index,
            doc_freq,
            n_docs: corpus.len(),
        })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Scores `corpus` over the fitted terms. Tf-idf uses the fitted
    /// document frequencies: `tf * ln(N / df)`.
    pub fn transform(&self, corpus: &Corpus, scheme: TdmScheme) -> Tdm {
        let idf: Vec<f64> = self
            .doc_freq
            .iter()
            .map(|&df| (self.n_docs as f64 / df as f64).ln())
            .collect();
        let scores = corpus
            .documents()
            .iter()
            .map(|doc| {
                let mut tf = vec![0.0; self.terms.len()];
                for t in &doc.tokens {
                    if let Some(&j) = self.index.get(t) {
                        tf[j] += 1.0;
                    }
                }
                match scheme {
                    TdmScheme::Frequency => tf,
                    TdmScheme::Binary => tf.into_iter().map(|x| if x > 0.0 { 1.0 } else { 0.0 }).collect(),
                    TdmScheme::Tfidf => tf.into_iter().zip(&idf).map(|(x, w)| x * w).collect(),
                }
            })
            .collect();
        Tdm {
            doc_ids: corpus.documents().iter().map(|d| d.id.clone()).collect(),
            terms: self.terms.clone(),
            scores,
            scheme,
        }
    }
}

pub fn build_tdm(corpus: &Corpus, max_terms: usize, scheme: TdmScheme) -> Result<Tdm> {
    Ok(TdmVocabulary::fit(corpus, max_terms)?.transform(corpus, scheme))
}

/// A square grayscale image in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub side: usize,
    pub pixels: Vec<f64>,
}

/// Writes `row` into a `side x side` image in row-major order, scaled to
/// `[0, 1]` by the row maximum; unused cells stay black.
pub fn fold_row(row: &[f64], side: usize) -> Result<Image> {
    let cells = side * side;
    if row.len() > cells {
        return Err(Error::Shape(format!("row of length {} does not fit {side}x{side}", row.len())));
    }
    let max = row.iter().copied().fold(0.0, f64::max);
    let mut pixels = vec![0.0; cells];
    if max > 0.0 {
        for (p, v) in pixels.iter_mut().zip(row) {
            *p = v / max;
        }
    }
    Ok(Image { side, pixels })
}

/// Inverse of [`fold_row`] on the first `len` cells.
pub fn unfold(image: &Image, len: usize) -> Vec<f64> {
    image.pixels[..len.min(image.pixels.len())].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Vocabulary};
    use crate::segmenter::PAD;
    use proptest::prelude::*;

    fn seg(tokens: &[&str]) -> Segment {
        Segment {
            doc_id: "d".into(),
            center: tokens[tokens.len() / 2].into(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            label: Label::Positive,
        }
    }

    fn model() -> EmbeddingModel {
        let vocab = Vocabulary::from_ordered_words(vec!["ww".into(), "vv".into()]).unwrap();
        EmbeddingModel::from_vectors(vocab, 3, vec![1.0, 2.0, 3.0, -1.0, 0.5, 0.0]).unwrap()
    }

    #[test]
    fn pad_segment_is_zero() {
        let m = sentence_matrix(&seg(&[PAD, PAD, PAD]), &model());
        assert_eq!((m.rows, m.cols), (3, 3));
        assert!(m.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rows_follow_tokens() {
        let m = sentence_matrix(&seg(&["ww", PAD, "ww"]), &model());
        assert_eq!(m.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(m.row(1), &[0.0, 0.0, 0.0]);
        assert_eq!(m.row(2), &[1.0, 2.0, 3.0]);
        assert_eq!(m.label, Label::Positive);
        assert_eq!(m.doc_id, "d");
    }

    #[test]
    fn shape_for_k4_d300() {
        let vocab = Vocabulary::from_ordered_words(vec!["ww".into()]).unwrap();
        let big = EmbeddingModel::from_vectors(vocab, 300, vec![0.1; 300]).unwrap();
        let m = sentence_matrix(&seg(&["ww"; 9]), &big);
        assert_eq!((m.rows, m.cols, m.values.len()), (9, 300, 2700));
    }

    fn two_docs() -> Corpus {
        let mut c = Corpus::new(vec![
            Document::new("d1", Label::Positive, "aa aa bb"),
            Document::new("d2", Label::Negative, "aa"),
        ])
        .unwrap();
        c.tokenize_all(None);
        c
    }

    #[test]
    fn tdm_schemes() {
        let f = build_tdm(&two_docs(), 1000, TdmScheme::Frequency).unwrap();
        assert_eq!(f.terms, ["aa", "bb"]);
        assert_eq!(f.scores, vec![vec![2.0, 1.0], vec![1.0, 0.0]]);
        let b = build_tdm(&two_docs(), 1000, TdmScheme::Binary).unwrap();
        assert_eq!(b.scores, vec![vec![1.0, 1.0], vec![1.0, 0.0]]);
        let t = build_tdm(&two_docs(), 1000, TdmScheme::Tfidf).unwrap();
        assert_eq!(t.scores[0][0], 0.0);
        assert_eq!(t.scores[1][0], 0.0);
        assert!((t.scores[0][1] - 0.693_147_180_559_945_3).abs() < 1e-12);
    }

    #[test]
    fn tdm_truncates_and_exports() {
        let t = build_tdm(&two_docs(), 1, TdmScheme::Frequency).unwrap();
        assert_eq!(t.terms, ["aa"]);
        assert_eq!(t.to_csv(), "doc_id,aa\nd1,2\nd2,1\n");
        let empty = Corpus::new(vec![Document::new("x", Label::Negative, "")]).unwrap();
        assert!(build_tdm(&empty, 10, TdmScheme::Binary).is_err());
    }

    #[test]
    fn fold_examples() {
        let img = fold_row(&vec![1.0; 1000], 32).unwrap();
        assert_eq!(img.pixels.len(), 1024);
        assert!(img.pixels[1000..].iter().all(|&p| p == 0.0));
        assert!(img.pixels[..1000].iter().all(|&p| p == 1.0));
        assert!(fold_row(&[0.0; 5], 3).unwrap().pixels.iter().all(|&p| p == 0.0));
        assert_eq!(fold_row(&[2.0, 4.0], 2).unwrap().pixels, vec![0.5, 1.0, 0.0, 0.0]);
        assert!(fold_row(&[1.0; 5], 2).is_err());
    }

    proptest! {
        #[test]
        fn fold_unfold_recovers_normalized_row(row in prop::collection::vec(0.0f64..100.0, 1..64)) {
            let img = fold_row(&row, 8).unwrap();
            let max = row.iter().copied().fold(0.0, f64::max);
            let back = unfold(&img, row.len());
            for (b, r) in back.iter().zip(&row) {
                let expected = if max > 0.0 { r / max } else { 0.0 };
                prop_assert_eq!(*b, expected);
            }
        }

        #[test]
        fn tfidf_of_ubiquitous_term_is_zero(extra in prop::collection::vec("[b-e]{2}", 0..6), n in 1usize..6) {
            let docs = (0..n)
                .map(|i| {
                    let text = format!("aa {}", extra.iter().skip(i).cloned().collect::<Vec<_>>().join(" "));
                    Document::new(format!("d{i}"), Label::Negative, text)
                })
                .collect();
            let mut c = Corpus::new(docs).unwrap();
            c.tokenize_all(None);
            let t = build_tdm(&c, 1000, TdmScheme::Tfidf).unwrap();
            let j = t.terms.iter().position(|x| x == "aa").unwrap();
            prop_assert!(t.scores.iter().all(|row| row[j] == 0.0));
        }
    }
}
