//! Bag-of-words reference classifier: term-document rows folded into square
//! grayscale images and fed to a one-hidden-layer dense network.

use serde::{Deserialize, Serialize};

use super::{check_both_classes, class_of, classify, evaluate_predictions, DocPrediction};
use crate::corpus::Corpus;
use crate::encoder::{fold_row, TdmScheme, TdmVocabulary};
use crate::eval::Metrics;
use crate::nn::{self, Example, LayerSpec, Network, OptimizerKind, TrainConfig};
use crate::util;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineOptions {
    pub max_terms: usize,
    pub side: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub threshold: f64,
    pub train: TrainConfig,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        BaselineOptions {
            max_terms: 1000,
            side: 32,
            hidden: 128,
            dropout: 0.5,
            threshold: 0.5,
            train: TrainConfig {
                optimizer: OptimizerKind::Adam,
                learning_rate: 0.001,
                batch_size: 128,
                validation_split: 0.25,
                max_epochs: 20,
                patience: 1,
                dropout: None,
                l2_lambda: 0.0,
                seed: 0,
            },
        }
    }
}

impl BaselineOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_terms == 0 || self.max_terms > self.side * self.side {
            return Err(Error::invalid(format!(
                "{} terms do not fit a {}x{} image",
                self.max_terms, self.side, self.side
            )));
        }
        if self.hidden == 0 {
            return Err(Error::invalid("baseline hidden layer needs at least one unit"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout rate {} outside [0, 1)", self.dropout)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        self.train.validate()
    }

    fn layers(&self) -> Vec<LayerSpec> {
        vec![
            LayerSpec::Dense { units: self.hidden },
            LayerSpec::Relu,
            LayerSpec::Dropout { rate: self.dropout },
            LayerSpec::SoftmaxOutput { classes: 2 },
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdmBaseline {
    pub vocabulary: TdmVocabulary,
    pub scheme: TdmScheme,
    pub side: usize,
    pub network: Network,
    pub threshold: f64,
}

impl TdmBaseline {
    /// Term selection, document frequencies and the network all come from
    /// `train`.
    pub fn fit(train: &Corpus, scheme: TdmScheme, options: &BaselineOptions, seed: u64) -> Result<Self> {
        options.validate()?;
        let vocabulary = TdmVocabulary::fit(train, options.max_terms)?;
        let rows = images(&vocabulary, train, scheme, options.side)?;
        let examples = rows
            .into_iter()
            .zip(train.documents())
            .map(|(input, d)| {
                Ok(Example {
                    input,
                    target: class_of(d.label, &format!("training document {}", d.id))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        check_both_classes(&examples, "baseline classifier")?;
        let side = options.side;
        let net = Network::new((1, side * side), &options.layers(), util::derive_seed(seed, "tdm-init"))?;
        let config = TrainConfig {
            seed: util::derive_seed(seed, "tdm-train"),
            ..options.train.clone()
        };
        let (network, _) = nn::train(net, &examples, &config)?;
        Ok(TdmBaseline {
            vocabulary,
            scheme,
            side,
            network,
            threshold: options.threshold,
        })
    }

    pub fn predict(&self, corpus: &Corpus) -> Result<Vec<DocPrediction>> {
        let rows = images(&self.vocabulary, corpus, self.scheme, self.side)?;
        rows.iter()
            .zip(corpus.documents())
            .map(|(x, d)| {
                let p = self.network.predict(x)?[1];
                Ok(DocPrediction {
                    doc_id: d.id.clone(),
                    probability: p,
                    predicted: classify(p, self.threshold),
                    gold: d.label,
                })
            })
            .collect()
    }
}

fn images(vocab: &TdmVocabulary, corpus: &Corpus, scheme: TdmScheme, side: usize) -> Result<Vec<Vec<f64>>> {
    vocab
        .transform(corpus, scheme)
        .scores
        .iter()
        .map(|row| Ok(fold_row(row, side)?.pixels))
        .collect()
}

pub fn run_tdm_baseline(
    train: &Corpus,
    test: &Corpus,
    scheme: TdmScheme,
    options: &BaselineOptions,
    seed: u64,
) -> Result<(Vec<DocPrediction>, Metrics)> {
    let model = TdmBaseline::fit(train, scheme, options, seed)?;
    let predictions = model.predict(test)?;
    let m = evaluate_predictions(&predictions)?;
    Ok((predictions, m))
}
