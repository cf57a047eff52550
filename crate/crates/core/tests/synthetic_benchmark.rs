//! Regression expectations on the committed generator output.

mod common;

use std::collections::HashSet;

use common::{benchmark_split, desk_options};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use webfpr::corpus::{Label, COMMERCE_PREFIX, GENERAL_PREFIX};
use webfpr::embedding::{cosine, train_embeddings, EmbeddingModel};
use webfpr::encoder::TdmScheme;
use webfpr::marker::Strategy;
use webfpr::pipeline::{recruit_markers, run_pipeline, run_tdm_baseline, BaselineOptions, HyperConfig};
use webfpr::segmenter::segment_corpus;

fn desk_embedding() -> (webfpr::corpus::Corpus, EmbeddingModel) {
    let (train, _) = benchmark_split();
    let model = train_embeddings(&train, &desk_options().embedding, 42).unwrap();
    (train, model)
}

fn mean_cosine(model: &EmbeddingModel, pairs: &[(&str, &str)]) -> f64 {
    pairs.iter().map(|(a, b)| cosine(model.lookup(a), model.lookup(b)).unwrap()).sum::<f64>() / pairs.len() as f64
}

fn top2_analog(strategy: Strategy) -> HyperConfig {
    HyperConfig {
        strategy,
        m: 30,
        ..HyperConfig::default()
    }
}

#[test]
fn every_positive_document_has_five_distinct_commerce_words() {
    let (train, test) = benchmark_split();
    for d in train.documents().iter().chain(test.documents()) {
        if d.label == Label::Positive {
            let distinct: HashSet<&str> = d
                .tokens
                .iter()
                .filter(|t| t.starts_with(COMMERCE_PREFIX))
                .map(String::as_str)
                .collect();
            assert!(distinct.len() >= 5, "{}", d.id);
        }
    }
}

#[test]
fn commerce_words_cluster_in_embedding_space() {
    let (_, model) = desk_embedding();
    let vocab = model.vocabulary();
    // vocabulary order is descending frequency
    let commerce: Vec<&str> = vocab.words().iter().filter(|w| w.starts_with(COMMERCE_PREFIX)).take(20).map(String::as_str).collect();
    let general: Vec<&str> = vocab.words().iter().filter(|w| w.starts_with(GENERAL_PREFIX)).map(String::as_str).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let sample: Vec<&str> = general.choose_multiple(&mut rng, 20).copied().collect();
    assert_eq!((commerce.len(), sample.len()), (20, 20));

    let mut within = Vec::new();
    for (i, a) in commerce.iter().enumerate() {
        for b in &commerce[i + 1..] {
            within.push((*a, *b));
        }
    }
    let across: Vec<(&str, &str)> = commerce.iter().flat_map(|a| sample.iter().map(move |b| (*a, *b))).collect();
    let w = mean_cosine(&model, &within);
    let x = mean_cosine(&model, &across);
    assert!(w > x, "within {w:.4} vs across {x:.4}");
}

#[test]
fn recruited_markers_are_mostly_commerce_words() {
    let (_, model) = desk_embedding();
    let options = desk_options();
    for strategy in [Strategy::Simple, Strategy::Advanced] {
        let markers = recruit_markers(&model, &top2_analog(strategy), &options).unwrap();
        assert_eq!(markers.markers().len(), 30);
        let commerce = markers.markers().iter().filter(|(w, _)| w.starts_with(COMMERCE_PREFIX)).count();
        assert!(commerce as f64 >= 0.8 * 30.0, "{strategy}: {commerce} of 30");
    }
}

#[test]
fn some_negative_documents_are_segmented() {
    let (train, model) = desk_embedding();
    let markers = recruit_markers(&model, &top2_analog(Strategy::Advanced), &desk_options()).unwrap();
    let seg = segment_corpus(&train, &markers, 4).unwrap();
    let negatives: Vec<&str> = train.documents().iter().filter(|d| d.label == Label::Negative).map(|d| d.id.as_str()).collect();
    let hit = negatives.iter().filter(|id| seg.coverage[**id] > 0).count();
    assert!(hit > 0);
    assert_eq!(seg.coverage.values().sum::<usize>(), seg.segments.len());
}

#[test]
fn tdm_baseline_beats_majority_class() {
    let (train, test) = benchmark_split();
    let (_, m) = run_tdm_baseline(&train, &test, TdmScheme::Frequency, &BaselineOptions::default(), 1).unwrap();
    assert!(m.accuracy > 0.81, "{m:?}");
}

#[test]
fn pipeline_beats_tdm_baseline_on_same_split() {
    let (train, test) = benchmark_split();
    let (_, _, fpr) = run_pipeline(&train, &test, &top2_analog(Strategy::Advanced), &desk_options(), 1).unwrap();
    let (_, tdm) = run_tdm_baseline(&train, &test, TdmScheme::Frequency, &BaselineOptions::default(), 1).unwrap();
    assert!(fpr.f_measure > tdm.f_measure, "pipeline {fpr:?} vs baseline {tdm:?}");
}
