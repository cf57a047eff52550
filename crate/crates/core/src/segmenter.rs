//! Marker-centered segmentation: every occurrence of a marker word yields a
//! fixed-width sentence of `2k+1` tokens that inherits its document's label.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::corpus::{Corpus, Label};
use crate::marker::MarkerSet;
use crate::util;
use crate::{Error, Result};

/// Fills window positions that fall outside the document. The tokenizer
/// never produces it, so it is never in an embedding vocabulary.
pub const PAD: &str = "⟨pad⟩";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub center: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub doc_id: String,
    pub center: String,
    pub tokens: Vec<String>,
    pub label: Label,
}

impl Segment {
    pub fn half_width(&self) -> usize {
        self.tokens.len() / 2
    }
}

/// One window per marker occurrence, in document order. Exact duplicate
/// windows within the document are dropped after their first occurrence.
pub fn segment_document(tokens: &[String], markers: &HashSet<&str>, k: usize) -> Result<Vec<Window>> {
    if k < 1 {
        return Err(Error::invalid("segment half-width k must be >= 1"));
    }
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let mut out = Vec::new();
    for (pos, tok) in tokens.iter().enumerate() {
        if !markers.contains(tok.as_str()) {
            continue;
        }
        let window: Vec<String> = (0..=2 * k)
            .map(|j| {
                (pos + j)
                    .checked_sub(k)
                    .and_then(|p| tokens.get(p))
                    .map_or_else(|| PAD.to_string(), Clone::clone)
            })
            .collect();
        if seen.insert(window.clone()) {
            out.push(Window {
                center: tok.clone(),
                tokens: window,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    /// Segment count per document id, zero-count documents included.
    pub coverage: BTreeMap<String, usize>,
}

pub fn segment_corpus(corpus: &Corpus, markers: &MarkerSet, k: usize) -> Result<Segmentation> {
    let words = markers.word_set();
    let mut segments = Vec::new();
    let mut coverage = BTreeMap::new();
    for doc in corpus.documents() {
        let windows = segment_document(&doc.tokens, &words, k)?;
        coverage.insert(doc.id.clone(), windows.len());
        segments.extend(windows.into_iter().map(|w| Segment {
            doc_id: doc.id.clone(),
            center: w.center,
            tokens: w.tokens,
            label: doc.label,
        }));
    }
    Ok(Segmentation { segments, coverage })
}

#[derive(Serialize)]
struct SegmentRecord<'a> {
    doc_id: &'a str,
    label: Option<u8>,
    center: &'a str,
    tokens: &'a [String],
}

/// Debug dump, one JSON object per segment.
pub fn segments_to_jsonl(segments: &[Segment]) -> String {
    let mut out = String::new();
    for s in segments {
        let rec = SegmentRecord {
            doc_id: &s.doc_id,
            label: s.label.code(),
            center: &s.center,
            tokens: &s.tokens,
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&rec).expect("serialize segment"));
    }
    out
}

pub fn save_segments(segments: &[Segment], path: &Path) -> Result<()> {
    util::write_file(path, segments_to_jsonl(segments).as_bytes())
}
