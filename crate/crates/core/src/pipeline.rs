//! The end-to-end classifier: embeddings, markers, segmentation, the Conv1D
//! sentence classifier, document-level aggregation and thresholding.
//!
//! Every learned component is fitted on the training corpus only; the test
//! corpus is touched by [`PipelineModel::predict`] alone.

mod baseline;
mod bundle;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label, COMMERCE_PREFIX};
use crate::embedding::{train_embeddings, EmbeddingConfig, EmbeddingModel};
use crate::encoder::sentence_matrix;
use crate::eval::{metrics, ConfusionMatrix, Metrics};
use crate::marker::{recruit_advanced, recruit_simple, AdvancedParams, MarkerSet, Strategy};
use crate::nn::{self, Example, LayerSpec, Network, OptimizerKind, TrainConfig};
use crate::segmenter::{segment_corpus, Segment};
use crate::util;
use crate::{Error, Result};

pub use baseline::{run_tdm_baseline, BaselineOptions, TdmBaseline};

pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Max,
    Histogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    Unadjusted,
    Adjusted,
}

macro_rules! named_enum {
    ($ty:ident, $what:literal, $($variant:ident => $name:literal),+) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($ty::$variant => $name),+
                }
            }
        }

        impl std::str::FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(Error::invalid(format!(concat!("unknown ", $what, " '{}'"), other))),
                }
            }
        }

        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

named_enum!(Rule, "aggregation rule", Max => "max", Histogram => "histogram");
named_enum!(ThresholdMode, "threshold mode", Unadjusted => "unadjusted", Adjusted => "adjusted");

/// The five searchable hyperparameters plus the user's seed words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    pub strategy: Strategy,
    pub m: usize,
    pub k: usize,
    pub rule: Rule,
    pub threshold_mode: ThresholdMode,
    pub seeds: Vec<String>,
}

/// The first four commerce words of the synthetic generator.
pub fn default_seeds() -> Vec<String> {
    (1..=4).map(|i| format!("{COMMERCE_PREFIX}{i:04}")).collect()
}

impl Default for HyperConfig {
    fn default() -> Self {
        HyperConfig {
            strategy: Strategy::Advanced,
            m: 150,
            k: 4,
            rule: Rule::Histogram,
            threshold_mode: ThresholdMode::Adjusted,
            seeds: default_seeds(),
        }
    }
}

impl HyperConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid("at least one seed word is required"));
        }
        if self.m < self.seeds.len() {
            return Err(Error::invalid(format!(
                "m = {} is smaller than the {} seed words",
                self.m,
                self.seeds.len()
            )));
        }
        build_sentence_cnn(self.k).map(|_| ())
    }
}

/// Settings of everything below the five searchable axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineOptions {
    pub embedding: EmbeddingConfig,
    pub advanced: AdvancedParams,
    pub cnn: TrainConfig,
    pub mlp: TrainConfig,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            embedding: EmbeddingConfig::default(),
            advanced: AdvancedParams::default(),
            cnn: default_cnn_training(),
            mlp: default_mlp_training(),
        }
    }
}

impl PipelineOptions {
    pub fn validate(&self) -> Result<()> {
        self.embedding.validate()?;
        self.advanced.validate()?;
        self.cnn.validate()?;
        self.mlp.validate()
    }
}

pub fn default_cnn_training() -> TrainConfig {
    TrainConfig {
        optimizer: OptimizerKind::RmsProp,
        learning_rate: 0.001,
        batch_size: 1024,
        validation_split: 0.25,
        max_epochs: 10,
        patience: 1,
        dropout: None,
        l2_lambda: 0.0,
        seed: 0,
    }
}

pub fn default_mlp_training() -> TrainConfig {
    TrainConfig {
        optimizer: OptimizerKind::RmsProp,
        learning_rate: 0.001,
        batch_size: 600,
        validation_split: 0.4,
        max_epochs: 800,
        patience: 1,
        dropout: None,
        l2_lambda: 8e-6,
        seed: 0,
    }
}

/// Two width-3 convolutions and two dense layers over `(2k+1) x d` inputs.
/// The first dense layer is as wide as the flattened second convolution.
pub fn build_sentence_cnn(k: usize) -> Result<Vec<LayerSpec>> {
    if k < 2 {
        return Err(Error::invalid(format!(
            "k = {k} is too small: two width-3 convolutions need 2k+1 >= 5 tokens"
        )));
    }
    Ok(vec![
        LayerSpec::Conv1D { filters: 45, width: 3 },
        LayerSpec::Relu,
        LayerSpec::Dropout { rate: 0.5 },
        LayerSpec::Conv1D { filters: 16, width: 3 },
        LayerSpec::Relu,
        LayerSpec::Dropout { rate: 0.5 },
        LayerSpec::Flatten,
        LayerSpec::Dense { units: 16 * (2 * k - 3) },
        LayerSpec::Relu,
        LayerSpec::Dropout { rate: 0.5 },
        LayerSpec::Dense { units: 500 },
        LayerSpec::Relu,
        LayerSpec::Dropout { rate: 0.5 },
        LayerSpec::SoftmaxOutput { classes: 2 },
    ])
}

pub fn build_histogram_mlp() -> Vec<LayerSpec> {
    let mut specs = Vec::new();
    for units in [16, 8, 4] {
        specs.push(LayerSpec::Dense { units });
        specs.push(LayerSpec::Relu);
        specs.push(LayerSpec::Dropout { rate: 0.25 });
    }
    specs.push(LayerSpec::SoftmaxOutput { classes: 2 });
    specs
}

fn class_of(label: Label, what: &str) -> Result<usize> {
    label
        .class_index()
        .ok_or_else(|| Error::invalid(format!("{what} has no gold label")))
}

fn check_both_classes(examples: &[Example], what: &str) -> Result<()> {
    let positives = examples.iter().filter(|e| e.target == 1).count();
    if positives == 0 || positives == examples.len() {
        return Err(Error::DegenerateLabels(format!(
            "{what}: {positives} positive of {}",
            examples.len()
        )));
    }
    Ok(())
}

/// Trains the sentence CNN on labels inherited from the source documents.
pub fn train_sentence_classifier(
    segments: &[Segment],
    model: &EmbeddingModel,
    config: &TrainConfig,
    seed: u64,
) -> Result<Network> {
    let Some(first) = segments.first() else {
        return Err(Error::DegenerateLabels("no training segments".into()));
    };
    let k = first.half_width();
    let mut examples = Vec::with_capacity(segments.len());
    for s in segments {
        if s.half_width() != k {
            return Err(Error::Shape("segments of different widths".into()));
        }
        examples.push(Example {
            input: sentence_matrix(s, model).values,
            target: class_of(s.label, &format!("segment of {}", s.doc_id))?,
        });
    }
    check_both_classes(&examples, "sentence classifier")?;
    let net = Network::new((2 * k + 1, model.dim()), &build_sentence_cnn(k)?, util::derive_seed(seed, "cnn-init"))?;
    let config = TrainConfig {
        seed: util::derive_seed(seed, "cnn-train"),
        ..config.clone()
    };
    Ok(nn::train(net, &examples, &config)?.0)
}

/// Positive-class probability of every segment.
pub fn sentence_probabilities(cnn: &Network, segments: &[Segment], model: &EmbeddingModel) -> Result<Vec<f64>> {
    segments
        .iter()
        .map(|s| Ok(cnn.predict(&sentence_matrix(s, model).values)?[1]))
        .collect()
}

/// Document probability under the max rule; 0 without segments.
pub fn max_rule(probs: &[f64]) -> f64 {
    probs.iter().copied().fold(0.0, f64::max)
}

/// Relative frequencies of `probs` over ten equal-width bins on `[0, 1]`,
/// the last bin closed. No probabilities give the zero vector.
pub fn histogram_features(probs: &[f64]) -> Result<Vec<f64>> {
    let mut bins = vec![0.0; HISTOGRAM_BINS];
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
        let b = ((p * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        bins[b] += 1.0;
    }
    if !probs.is_empty() {
        let n = probs.len() as f64;
        bins.iter_mut().for_each(|b| *b /= n);
    }
    Ok(bins)
}

pub fn train_histogram_mlp(histograms: &[(Vec<f64>, Label)], config: &TrainConfig, seed: u64) -> Result<Network> {
    let examples = histograms
        .iter()
        .map(|(h, l)| {
            Ok(Example {
                input: h.clone(),
                target: class_of(*l, "histogram")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    check_both_classes(&examples, "histogram classifier")?;
    let net = Network::new((1, HISTOGRAM_BINS), &build_histogram_mlp(), util::derive_seed(seed, "mlp-init"))?;
    let config = TrainConfig {
        seed: util::derive_seed(seed, "mlp-train"),
        ..config.clone()
    };
    Ok(nn::train(net, &examples, &config)?.0)
}

/// The `q`-th largest probability with `q = max(1, round(rate · N))`; used
/// with the rule `p >= threshold`.
pub fn adjusted_threshold(probs: &[f64], target_rate: f64) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::invalid("adjusted threshold of no probabilities"));
    }
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(Error::invalid(format!("target rate {target_rate} outside (0, 1)")));
    }
    let mut sorted = probs.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let q = ((target_rate * probs.len() as f64).round() as usize).clamp(1, probs.len());
    Ok(sorted[q - 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocPrediction {
    pub doc_id: String,
    pub probability: f64,
    pub predicted: Label,
    pub gold: Label,
}

pub fn classify(probability: f64, threshold: f64) -> Label {
    if probability >= threshold {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// CSV with header `doc_id,probability,predicted,gold`; unknown gold labels
/// are left empty.
pub fn predictions_to_csv(predictions: &[DocPrediction]) -> String {
    let mut out = String::from("doc_id,probability,predicted,gold\n");
    for p in predictions {
        let code = |l: Label| l.code().map_or(String::new(), |c| c.to_string());
        let _ = writeln!(out, "{},{},{},{}", p.doc_id, p.probability, code(p.predicted), code(p.gold));
    }
    out
}

pub fn save_predictions(predictions: &[DocPrediction], path: &Path) -> Result<()> {
    util::write_file(path, predictions_to_csv(predictions).as_bytes())
}

pub fn predictions_from_csv(src: &str, path: &Path) -> Result<Vec<DocPrediction>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = src.lines().enumerate();
    match lines.next() {
        Some((_, "doc_id,probability,predicted,gold")) => {}
        _ => return Err(parse_err(1, "expected header doc_id,probability,predicted,gold".into())),
    }
    let label = |s: &str, line: usize| -> Result<Label> {
        match s {
            "" => Ok(Label::Unknown),
            "0" => Ok(Label::Negative),
            "1" => Ok(Label::Positive),
            other => Err(parse_err(line, format!("bad label '{other}'"))),
        }
    };
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(i + 1, format!("expected 4 fields, got {}", fields.len())));
        }
        let probability: f64 = fields[1]
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad probability '{}'", fields[1])))?;
        out.push(DocPrediction {
            doc_id: fields[0].to_string(),
            probability,
            predicted: label(fields[2], i + 1)?,
            gold: label(fields[3], i + 1)?,
        });
    }
    Ok(out)
}

pub fn load_predictions(path: &Path) -> Result<Vec<DocPrediction>> {
    predictions_from_csv(&util::read_to_string(path)?, path)
}

/// Confusion counts over the predictions that carry a gold label.
pub fn evaluate_predictions(predictions: &[DocPrediction]) -> Result<Metrics> {
    metrics(&ConfusionMatrix::from_labels(
        predictions.iter().map(|p| (p.predicted, p.gold)),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineModel {
    pub embedding: EmbeddingModel,
    pub markers: MarkerSet,
    pub cnn: Network,
    pub mlp: Option<Network>,
    pub threshold: f64,
    pub hyper: HyperConfig,
    pub options: PipelineOptions,
    pub seed: u64,
    pub train_checksum: String,
}

impl PipelineModel {
    /// Segment probabilities grouped by document, in corpus order.
    fn segment_probabilities(&self, corpus: &Corpus) -> Result<Vec<Vec<f64>>> {
        let seg = segment_corpus(corpus, &self.markers, self.hyper.k)?;
        let probs = sentence_probabilities(&self.cnn, &seg.segments, &self.embedding)?;
        let index: HashMap<&str, usize> = corpus
            .documents()
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.as_str(), i))
            .collect();
        let mut grouped = vec![Vec::new(); corpus.len()];
        for (s, p) in seg.segments.iter().zip(probs) {
            grouped[index[s.doc_id.as_str()]].push(p);
        }
        Ok(grouped)
    }

    fn aggregate(&self, grouped: &[Vec<f64>]) -> Result<Vec<f64>> {
        match (&self.mlp, self.hyper.rule) {
            (None, Rule::Max) => Ok(grouped.iter().map(|g| max_rule(g)).collect()),
            (Some(mlp), Rule::Histogram) => grouped
                .iter()
                .map(|g| Ok(mlp.predict(&histogram_features(g)?)?[1]))
                .collect(),
            _ => Err(Error::Format("histogram classifier present iff the rule is histogram".into())),
        }
    }

    /// Document probabilities in corpus order.
    pub fn document_probabilities(&self, corpus: &Corpus) -> Result<Vec<f64>> {
        self.aggregate(&self.segment_probabilities(corpus)?)
    }

    pub fn predict(&self, corpus: &Corpus) -> Result<Vec<DocPrediction>> {
        let probs = self.document_probabilities(corpus)?;
        Ok(corpus
            .documents()
            .iter()
            .zip(probs)
            .map(|(d, p)| DocPrediction {
                doc_id: d.id.clone(),
                probability: p,
                predicted: classify(p, self.threshold),
                gold: d.label,
            })
            .collect())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        bundle::save(self, dir)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        bundle::load(dir)
    }
}

pub fn recruit_markers(model: &EmbeddingModel, hyper: &HyperConfig, options: &PipelineOptions) -> Result<MarkerSet> {
    match hyper.strategy {
        Strategy::Simple => recruit_simple(model, &hyper.seeds, hyper.m),
        Strategy::Advanced => recruit_advanced(model, &hyper.seeds, hyper.m, &options.advanced),
    }
}

/// Trains embeddings and recruits markers on `train`, then calls [`fit_with`].
pub fn fit(train: &Corpus, hyper: &HyperConfig, options: &PipelineOptions, seed: u64) -> Result<PipelineModel> {
    hyper.validate()?;
    options.validate()?;
    let embedding = train_embeddings(train, &options.embedding, util::derive_seed(seed, "embedding"))?;
    let markers = recruit_markers(&embedding, hyper, options)?;
    fit_with(train, embedding, markers, hyper, options, seed)
}

/// Fits the sentence CNN, the optional histogram MLP and the threshold on
/// `train`, reusing a given embedding model and marker set.
pub fn fit_with(
    train: &Corpus,
    embedding: EmbeddingModel,
    markers: MarkerSet,
    hyper: &HyperConfig,
    options: &PipelineOptions,
    seed: u64,
) -> Result<PipelineModel> {
    hyper.validate()?;
    options.validate()?;
    if markers.m() != hyper.m || markers.strategy() != hyper.strategy || markers.seeds() != hyper.seeds.as_slice() {
        return Err(Error::invalid("marker set does not match the hyperparameters"));
    }
    for d in train.documents() {
        class_of(d.label, &format!("training document {}", d.id))?;
    }
    let rate = train
        .positive_rate()
        .ok_or_else(|| Error::invalid("empty training corpus"))?;

    let seg = segment_corpus(train, &markers, hyper.k)?;
    let cnn = train_sentence_classifier(&seg.segments, &embedding, &options.cnn, seed)?;
    let mut model = PipelineModel {
        embedding,
        markers,
        cnn,
        mlp: None,
        threshold: 0.5,
        hyper: hyper.clone(),
        options: options.clone(),
        seed,
        train_checksum: train.checksum(),
    };
    let grouped = model.segment_probabilities(train)?;
    if hyper.rule == Rule::Histogram {
        let hists = grouped
            .iter()
            .zip(train.documents())
            .map(|(g, d)| Ok((histogram_features(g)?, d.label)))
            .collect::<Result<Vec<_>>>()?;
        model.mlp = Some(train_histogram_mlp(&hists, &options.mlp, seed)?);
    }
    if hyper.threshold_mode == ThresholdMode::Adjusted {
        model.threshold = adjusted_threshold(&model.aggregate(&grouped)?, rate)?;
    }
    Ok(model)
}

/// Fits on `train`, predicts `test` and scores the predictions.
pub fn run_pipeline(
    train: &Corpus,
    test: &Corpus,
    hyper: &HyperConfig,
    options: &PipelineOptions,
    seed: u64,
) -> Result<(PipelineModel, Vec<DocPrediction>, Metrics)> {
    let model = fit(train, hyper, options, seed)?;
    let predictions = model.predict(test)?;
    let m = evaluate_predictions(&predictions)?;
    Ok((model, predictions, m))
}
