//! Seeded generator of labeled synthetic "websites".
//!
//! Every document belongs to one topic. Its background text mixes words of
//! that topic with words of the whole general vocabulary, both Zipf
//! distributed. Positive documents additionally carry one or more commerce
//! bursts: short spans where most slots hold distinct commerce words. A share
//! of negative documents is contaminated with isolated commerce words, so a
//! bag-of-words view sees commerce vocabulary on both sides while only the
//! positives show it densely clustered.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{Corpus, Document, Label};
use crate::util;
use crate::{Error, Result};

pub const COMMERCE_PREFIX: &str = "com";
pub const GENERAL_PREFIX: &str = "gen";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_docs: usize,
    pub positive_rate: f64,
    pub commerce_vocab_size: usize,
    pub general_vocab_size: usize,
    pub commerce_zipf_exponent: f64,
    pub general_zipf_exponent: f64,
    /// The general vocabulary is dealt round-robin into this many topics.
    pub topics: usize,
    /// Share of background tokens drawn from the document's own topic.
    pub topic_fraction: f64,
    pub doc_length_mean: f64,
    pub doc_length_sd: f64,
    pub doc_length_min: usize,
    pub doc_length_max: usize,
    /// Mean number of commerce bursts in a positive document (at least one).
    pub burst_rate: f64,
    pub burst_length_min: usize,
    pub burst_length_max: usize,
    /// Share of burst slots holding commerce words; never fewer than five.
    pub burst_commerce_fraction: f64,
    /// Probability that a negative document receives scattered commerce words.
    pub contamination_prob: f64,
    pub contamination_min: usize,
    pub contamination_max: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_docs: 2000,
            positive_rate: 0.19,
            commerce_vocab_size: 100,
            general_vocab_size: 1000,
            commerce_zipf_exponent: 0.8,
            general_zipf_exponent: 1.0,
            topics: 20,
            topic_fraction: 0.7,
            doc_length_mean: 250.0,
            doc_length_sd: 100.0,
            doc_length_min: 40,
            doc_length_max: 800,
            burst_rate: 3.0,
            burst_length_min: 12,
            burst_length_max: 24,
            burst_commerce_fraction: 0.8,
            contamination_prob: 0.6,
            contamination_min: 2,
            contamination_max: 8,
        }
    }
}

/// Minimum number of distinct commerce words written into every burst.
const MIN_BURST_COMMERCE: usize = 5;

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(format!("generator config: {m}")));
        if self.n_docs < 1 {
            return fail("n_docs must be >= 1");
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return fail("positive_rate must lie in (0, 1)");
        }
        if self.commerce_vocab_size < 1 || self.general_vocab_size < 1 {
            return fail("vocabulary sizes must be >= 1");
        }
        if !(self.commerce_zipf_exponent >= 0.0 && self.general_zipf_exponent >= 0.0) {
            return fail("zipf exponents must be >= 0");
        }
        if self.topics < 1 || self.topics > self.general_vocab_size {
            return fail("topics must lie in [1, general_vocab_size]");
        }
        if !(0.0..=1.0).contains(&self.topic_fraction) {
            return fail("topic_fraction must lie in [0, 1]");
        }
        if !(self.doc_length_mean.is_finite() && self.doc_length_sd >= 0.0) {
            return fail("doc length mean must be finite and sd >= 0");
        }
        if self.doc_length_min < 1 || self.doc_length_min > self.doc_length_max {
            return fail("doc length bounds must satisfy 1 <= min <= max");
        }
        if self.burst_length_min < 1 || self.burst_length_min > self.burst_length_max {
            return fail("burst length bounds must satisfy 1 <= min <= max");
        }
        if self.burst_length_max > self.doc_length_max {
            return fail("burst_length_max exceeds doc_length_max");
        }
        if !(self.burst_rate >= 1.0) {
            return fail("burst_rate must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.burst_commerce_fraction) {
            return fail("burst_commerce_fraction must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.contamination_prob) {
            return fail("contamination_prob must lie in [0, 1]");
        }
        if self.contamination_min > self.contamination_max {
            return fail("contamination bounds must satisfy min <= max");
        }
        Ok(())
    }

    pub fn n_positive(&self) -> usize {
        (self.positive_rate * self.n_docs as f64).round() as usize
    }
}

fn vocab_words(prefix: &str, size: usize) -> Vec<String> {
    let width = size.to_string().len().max(4);
    (1..=size).map(|i| format!("{prefix}{i:0width$}")).collect()
}

fn zipf(size: usize, exponent: f64) -> WeightedIndex<f64> {
    let weights = (1..=size).map(|r| (r as f64).powf(-exponent));
    WeightedIndex::new(weights).expect("zipf weights are positive")
}

struct Sampler {
    commerce: Vec<String>,
    general: Vec<String>,
    commerce_dist: WeightedIndex<f64>,
    general_dist: WeightedIndex<f64>,
    /// Indices into `general`, one list per topic, each in rank order.
    topic_words: Vec<Vec<usize>>,
    topic_dists: Vec<WeightedIndex<f64>>,
    topic_fraction: f64,
}

impl Sampler {
    fn general_word<R: RngCore>(&self, topic: usize, rng: &mut R) -> String {
        let i = if rng.random_bool(self.topic_fraction) {
            self.topic_words[topic][self.topic_dists[topic].sample(rng)]
        } else {
            self.general_dist.sample(rng)
        };
        self.general[i].clone()
    }

    fn commerce_word<R: RngCore>(&self, rng: &mut R) -> String {
        self.commerce[self.commerce_dist.sample(rng)].clone()
    }

    /// Up to `n` distinct commerce words, Zipf-weighted.
    fn distinct_commerce<R: RngCore>(&self, n: usize, rng: &mut R) -> Vec<String> {
        let n = n.min(self.commerce.len());
        let mut picked = HashSet::with_capacity(n);
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        while out.len() < n {
            let i = if attempts < 64 * n {
                self.commerce_dist.sample(rng)
            } else {
                // heavy-tailed weights can make rejection slow; fall back to uniform
                rng.random_range(0..self.commerce.len())
            };
            attempts += 1;
            if picked.insert(i) {
                out.push(self.commerce[i].clone());
            }
        }
        out
    }
}

fn burst<R: RngCore>(cfg: &GeneratorConfig, s: &Sampler, topic: usize, len: usize, rng: &mut R) -> Vec<String> {
    let wanted = ((cfg.burst_commerce_fraction * len as f64).round() as usize)
        .max(MIN_BURST_COMMERCE)
        .min(len);
    let words = s.distinct_commerce(wanted, rng);
    let mut slots: Vec<usize> = (0..len).collect();
    slots.shuffle(rng);
    let mut out: Vec<String> = (0..len).map(|_| s.general_word(topic, rng)).collect();
    for (slot, w) in slots.into_iter().zip(words) {
        out[slot] = w;
    }
    out
}

/// Generates `config.n_docs` documents, exactly `round(positive_rate * n_docs)`
/// of them positive. Output is a pure function of `(config, seed)`.
pub fn generate_synthetic(config: &GeneratorConfig, seed: u64) -> Result<Corpus> {
    config.validate()?;
    let mut rng = util::rng(seed);
    let sampler = Sampler {
        commerce: vocab_words(COMMERCE_PREFIX, config.commerce_vocab_size),
        general: vocab_words(GENERAL_PREFIX, config.general_vocab_size),
        commerce_dist: zipf(config.commerce_vocab_size, config.commerce_zipf_exponent),
        general_dist: zipf(config.general_vocab_size, config.general_zipf_exponent),
        topic_words: (0..config.topics)
            .map(|t| (t..config.general_vocab_size).step_by(config.topics).collect())
            .collect(),
        topic_dists: (0..config.topics)
            .map(|t| {
                let size = (t..config.general_vocab_size).step_by(config.topics).count();
                zipf(size, config.general_zipf_exponent)
            })
            .collect(),
        topic_fraction: config.topic_fraction,
    };
    let length_dist = Normal::new(config.doc_length_mean, config.doc_length_sd)
        .map_err(|e| Error::invalid(format!("generator config: {e}")))?;
    let extra_bursts = if config.burst_rate > 1.0 {
        Some(Poisson::new(config.burst_rate - 1.0).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };

    let mut labels = vec![Label::Negative; config.n_docs];
    let mut order: Vec<usize> = (0..config.n_docs).collect();
    order.shuffle(&mut rng);
    for &i in &order[..config.n_positive()] {
        labels[i] = Label::Positive;
    }

    let id_width = config.n_docs.to_string().len().max(5);
    let mut docs = Vec::with_capacity(config.n_docs);
    for (i, &label) in labels.iter().enumerate() {
        let sampled = length_dist.sample(&mut rng).round();
        let mut len = sampled.clamp(config.doc_length_min as f64, config.doc_length_max as f64) as usize;
        let topic = rng.random_range(0..config.topics);
        let mut tokens: Vec<String> = Vec::new();
        if label == Label::Positive {
            let mut n_bursts = 1 + extra_bursts.as_ref().map_or(0, |p| p.sample(&mut rng) as usize);
            len = len.max(config.burst_length_max);
            n_bursts = n_bursts.min(len / config.burst_length_max).max(1);
            tokens = (0..len).map(|_| sampler.general_word(topic, &mut rng)).collect();
            // one burst per equal-width region keeps bursts disjoint
            let region = len / n_bursts;
            for b in 0..n_bursts {
                let blen = rng.random_range(config.burst_length_min..=config.burst_length_max);
                let start = b * region + rng.random_range(0..=region - blen);
                for (j, w) in burst(config, &sampler, topic, blen, &mut rng).into_iter().enumerate() {
                    tokens[start + j] = w;
                }
            }
        } else {
            tokens.extend((0..len).map(|_| sampler.general_word(topic, &mut rng)));
            if rng.random_bool(config.contamination_prob) {
                let n = rng
                    .random_range(config.contamination_min..=config.contamination_max)
                    .min(len);
                let positions: Vec<usize> = (0..len).collect();
                for &p in positions.choose_multiple(&mut rng, n) {
                    tokens[p] = sampler.commerce_word(&mut rng);
                }
            }
        }
        docs.push(Document::new(
            format!("doc{:0id_width$}", i + 1),
            label,
            tokens.join(" "),
        ));
    }
    Corpus::new(docs)
}
