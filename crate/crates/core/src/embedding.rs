//! CBOW word embeddings trained with negative sampling.
//!
//! Each training example predicts a center word from the mean of the input
//! vectors of its in-vocabulary neighbors (up to `window` positions on either
//! side, the whole document being one sentence). The loss of one example is
//!
//! ```text
//! -ln σ(u_target · c) - Σ_j ln σ(-u_neg_j · c)
//! ```
//!
//! with `c` the context mean and `u` the output vectors. Only the input
//! vectors are exported and queried.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocabulary, Corpus, Vocabulary};
use crate::util;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dim: usize,
    /// Context positions on each side of the center word.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub final_lr: f64,
    pub min_count: u64,
    pub noise_exponent: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 300,
            window: 8,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            final_lr: 0.0001,
            min_count: 5,
            noise_exponent: 0.75,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(format!("embedding config: {m}")));
        if self.dim < 2 {
            return fail("dim must be >= 2");
        }
        if self.window < 1 {
            return fail("window must be >= 1");
        }
        if self.negatives < 1 {
            return fail("negatives must be >= 1");
        }
        if !(self.initial_lr > 0.0 && self.final_lr > 0.0) {
            return fail("learning rates must be > 0");
        }
        if !(self.noise_exponent.is_finite() && self.noise_exponent >= 0.0) {
            return fail("noise_exponent must be finite and >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    vocab: Vocabulary,
    dim: usize,
    input: Vec<f64>,
    output: Vec<f64>,
    null: Vec<f64>,
}

impl EmbeddingModel {
    /// Wraps existing input vectors (row-major, one row per vocabulary word).
    /// Output vectors start at zero.
    pub fn from_vectors(vocab: Vocabulary, dim: usize, input: Vec<f64>) -> Result<Self> {
        if dim == 0 || input.len() != vocab.len() * dim {
            return Err(Error::Shape(format!(
                "{} values for {} words of dimension {dim}",
                input.len(),
                vocab.len()
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("embedding vectors must be finite".into()));
        }
        let output = vec![0.0; input.len()];
        Ok(EmbeddingModel {
            vocab,
            dim,
            input,
            output,
            null: vec![0.0; dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        &self.input[index * self.dim..(index + 1) * self.dim]
    }

    pub fn output_vector(&self, index: usize) -> &[f64] {
        &self.output[index * self.dim..(index + 1) * self.dim]
    }

    /// Input vector of `word`, or the null vector when it is out of vocabulary.
    pub fn lookup(&self, word: &str) -> &[f64] {
        match self.vocab.index_of(word) {
            Some(i) => self.vector(i),
            None => &self.null,
        }
    }

    /// The `n` vocabulary words most cosine-similar to `query`, excluding
    /// `exclude`, in descending order with lexicographic tie-break.
    pub fn nearest(&self, query: &[f64], n: usize, exclude: &HashSet<String>) -> Result<Vec<(String, f64)>> {
        if n == 0 {
            return Err(Error::invalid("nearest: n must be >= 1"));
        }
        if query.len() != self.dim {
            return Err(Error::Shape(format!("query of length {} vs dimension {}", query.len(), self.dim)));
        }
        let mut scored: Vec<(&str, f64)> = (0..self.vocab.len())
            .filter(|&i| !exclude.contains(self.vocab.word(i)))
            .map(|i| (self.vocab.word(i), cosine_unchecked(query, self.vector(i))))
            .collect();
        util::sort_desc_by_score(&mut scored);
        scored.truncate(n);
        Ok(scored.into_iter().map(|(w, s)| (w.to_string(), s)).collect())
    }

    /// Text format: a `V d` header, then one line per word with `d`
    /// floats at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.input.len() * 24);
        let _ = writeln!(out, "{} {}", self.vocab.len(), self.dim);
        for i in 0..self.vocab.len() {
            out.push_str(self.vocab.word(i));
            for v in self.vector(i) {
                let _ = write!(out, " {v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_file(path, self.to_text().as_bytes())
    }

    pub fn from_text(src: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = src.lines();
        let header = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
        let mut parts = header.split_whitespace();
        let (v, d) = match (parts.next(), parts.next(), parts.next()) {
            (Some(v), Some(d), None) => (
                v.parse::<usize>().map_err(|e| perr(1, e.to_string()))?,
                d.parse::<usize>().map_err(|e| perr(1, e.to_string()))?,
            ),
            _ => return Err(perr(1, "header must be 'V d'".into())),
        };
        let mut words = Vec::with_capacity(v);
        let mut input = Vec::with_capacity(v * d);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let mut parts = line.split(' ');
            let word = parts.next().filter(|w| !w.is_empty()).ok_or_else(|| perr(lineno, "missing word".into()))?;
            let before = input.len();
            for p in parts {
                input.push(p.parse::<f64>().map_err(|e| perr(lineno, e.to_string()))?);
            }
            if input.len() - before != d {
                return Err(perr(lineno, format!("expected {d} values, got {}", input.len() - before)));
            }
            words.push(word.to_string());
        }
        if words.len() != v {
            return Err(perr(1, format!("header announces {v} words, file has {}", words.len())));
        }
        EmbeddingModel::from_vectors(Vocabulary::from_ordered_words(words)?, d, input)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = util::read_to_string(path)?;
        EmbeddingModel::from_text(&src, path)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn cosine_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("cosine of lengths {} and {}", a.len(), b.len())));
    }
    Ok(cosine_unchecked(a, b))
}

/// Draws noise words with probability proportional to `count^exponent`.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    dist: WeightedIndex<f64>,
    len: usize,
}

impl NoiseSampler {
    pub fn new(counts: &[u64], exponent: f64) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(exponent)).collect();
        let dist = WeightedIndex::new(&weights)
            .map_err(|e| Error::invalid(format!("noise distribution: {e}")))?;
        Ok(NoiseSampler { dist, len: counts.len() })
    }

    pub fn sample<R: RngCore>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }

    /// A draw different from `target`; `None` when the vocabulary has a
    /// single word.
    pub fn sample_excluding<R: RngCore>(&self, target: usize, rng: &mut R) -> Option<usize> {
        if self.len < 2 {
            return None;
        }
        loop {
            let s = self.sample(rng);
            if s != target {
                return Some(s);
            }
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Loss and exact gradients of one CBOW negative-sampling example.
#[derive(Debug, Clone, PartialEq)]
pub struct CbowGradients {
    pub loss: f64,
    /// Gradient with respect to each context input vector (identical for all
    /// of them, since the context is their mean).
    pub context: Vec<f64>,
    pub target: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn cbow_loss(contexts: &[&[f64]], target: &[f64], negatives: &[&[f64]]) -> f64 {
    let c = context_mean(contexts);
    softplus(-dot(target, &c)) + negatives.iter().map(|u| softplus(dot(u, &c))).sum::<f64>()
}

pub fn cbow_gradients(contexts: &[&[f64]], target: &[f64], negatives: &[&[f64]]) -> CbowGradients {
    let c = context_mean(contexts);
    let dim = c.len();
    let mut grad_c = vec![0.0; dim];
    let mut loss = 0.0;
    let mut out_grad = |u: &[f64], label: f64| {
        let s = dot(u, &c);
        loss += if label == 1.0 { softplus(-s) } else { softplus(s) };
        let coef = sigmoid(s) - label;
        for (g, x) in grad_c.iter_mut().zip(u) {
            *g += coef * x;
        }
        c.iter().map(|x| coef * x).collect::<Vec<f64>>()
    };
    let target_grad = out_grad(target, 1.0);
    let neg_grads = negatives.iter().map(|u| out_grad(u, 0.0)).collect();
    let n = contexts.len() as f64;
    CbowGradients {
        loss,
        context: grad_c.iter().map(|g| g / n).collect(),
        target: target_grad,
        negatives: neg_grads,
    }
}

fn context_mean(contexts: &[&[f64]]) -> Vec<f64> {
    let dim = contexts.first().map_or(0, |v| v.len());
    let mut c = vec![0.0; dim];
    for v in contexts {
        for (a, b) in c.iter_mut().zip(v.iter()) {
            *a += b;
        }
    }
    let n = contexts.len() as f64;
    c.iter_mut().for_each(|a| *a /= n);
    c
}

struct Trainer<'a> {
    dim: usize,
    input: &'a mut [f64],
    output: &'a mut [f64],
    c: Vec<f64>,
    grad_c: Vec<f64>,
}

impl Trainer<'_> {
    /// One SGD step on a single example; returns its loss before the update.
    fn step(&mut self, context: &[usize], target: usize, negatives: &[usize], lr: f64) -> f64 {
        let d = self.dim;
        self.c.iter_mut().for_each(|x| *x = 0.0);
        for &i in context {
            for (a, b) in self.c.iter_mut().zip(&self.input[i * d..(i + 1) * d]) {
                *a += b;
            }
        }
        let n = context.len() as f64;
        self.c.iter_mut().for_each(|x| *x /= n);
        self.grad_c.iter_mut().for_each(|x| *x = 0.0);

        // output gradients are taken at the pre-update vectors
        let mut coefs = Vec::with_capacity(negatives.len() + 1);
        let mut loss = 0.0;
        for (j, label) in std::iter::once((target, 1.0)).chain(negatives.iter().map(|&j| (j, 0.0))) {
            let u = &self.output[j * d..(j + 1) * d];
            let s = dot(u, &self.c);
            loss += if label == 1.0 { softplus(-s) } else { softplus(s) };
            let coef = sigmoid(s) - label;
            for (g, x) in self.grad_c.iter_mut().zip(u) {
                *g += coef * x;
            }
            coefs.push((j, coef));
        }
        for (j, coef) in coefs {
            for (u, x) in self.output[j * d..(j + 1) * d].iter_mut().zip(&self.c) {
                *u -= lr * coef * x;
            }
        }
        for &i in context {
            for (v, g) in self.input[i * d..(i + 1) * d].iter_mut().zip(&self.grad_c) {
                *v -= lr * g / n;
            }
        }
        loss
    }
}

/// In-vocabulary neighbor indices of position `t`.
fn context_of(doc: &[Option<usize>], t: usize, window: usize, out: &mut Vec<usize>) {
    out.clear();
    let lo = t.saturating_sub(window);
    let hi = (t + window).min(doc.len() - 1);
    for (p, tok) in doc.iter().enumerate().take(hi + 1).skip(lo) {
        if p != t {
            if let Some(i) = tok {
                out.push(*i);
            }
        }
    }
}

/// Trains embeddings on the tokens of `corpus`. Identical inputs and seed
/// give a bitwise-identical model.
pub fn train_embeddings(corpus: &Corpus, config: &EmbeddingConfig, seed: u64) -> Result<EmbeddingModel> {
    config.validate()?;
    let vocab = build_vocabulary(corpus, config.min_count)?;
    let d = config.dim;
    let mut rng = util::rng(seed);
    let half = 0.5 / d as f64;
    let mut input: Vec<f64> = (0..vocab.len() * d).map(|_| rng.random_range(-half..half)).collect();
    let mut output = vec![0.0; vocab.len() * d];

    let docs: Vec<Vec<Option<usize>>> = corpus
        .documents()
        .iter()
        .map(|doc| doc.tokens.iter().map(|t| vocab.index_of(t)).collect())
        .collect();
    let mut ctx = Vec::with_capacity(2 * config.window);
    let mut per_epoch = 0usize;
    for doc in &docs {
        for t in 0..doc.len() {
            if doc[t].is_some() {
                context_of(doc, t, config.window, &mut ctx);
                per_epoch += usize::from(!ctx.is_empty());
            }
        }
    }
    let total = (per_epoch * config.epochs).max(1) as f64;
    let noise = NoiseSampler::new(vocab.counts(), config.noise_exponent)?;

    let mut trainer = Trainer {
        dim: d,
        input: &mut input,
        output: &mut output,
        c: vec![0.0; d],
        grad_c: vec![0.0; d],
    };
    let mut negs = Vec::with_capacity(config.negatives);
    let mut step = 0usize;
    for _ in 0..config.epochs {
        for doc in &docs {
            for t in 0..doc.len() {
                let Some(target) = doc[t] else { continue };
                context_of(doc, t, config.window, &mut ctx);
                if ctx.is_empty() {
                    continue;
                }
                let lr = config.initial_lr - (config.initial_lr - config.final_lr) * step as f64 / total;
                negs.clear();
                for _ in 0..config.negatives {
                    if let Some(n) = noise.sample_excluding(target, &mut rng) {
                        negs.push(n);
                    }
                }
                trainer.step(&ctx, target, &negs, lr);
                step += 1;
            }
        }
    }
    Ok(EmbeddingModel {
        null: vec![0.0; d],
        vocab,
        dim: d,
        input,
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Label};
    use proptest::prelude::*;
    use rand::Rng;

    fn toy_model(words: &[&str], vectors: &[&[f64]]) -> EmbeddingModel {
        let vocab = Vocabulary::from_ordered_words(words.iter().map(|w| w.to_string()).collect()).unwrap();
        let dim = vectors[0].len();
        EmbeddingModel::from_vectors(vocab, dim, vectors.concat()).unwrap()
    }

    fn tiny_corpus() -> Corpus {
        let mut c = Corpus::new(vec![
            Document::new("1", Label::Positive, "cart pay online cart pay online shop"),
            Document::new("2", Label::Negative, "river tree mountain river tree cart"),
        ])
        .unwrap();
        c.tokenize_all(None);
        c
    }

    fn tiny_config() -> EmbeddingConfig {
        EmbeddingConfig {
            dim: 4,
            window: 2,
            negatives: 2,
            epochs: 3,
            min_count: 1,
            ..EmbeddingConfig::default()
        }
    }

    #[test]
    fn zero_vectors_loss_is_k_plus_one_ln2() {
        let z = [0.0; 3];
        for k in 0..5 {
            let negs: Vec<&[f64]> = (0..k).map(|_| &z[..]).collect();
            let loss = cbow_loss(&[&z, &z], &z, &negs);
            assert!((loss - (k as f64 + 1.0) * std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_epochs_returns_seeded_init() {
        let cfg = EmbeddingConfig { epochs: 0, ..tiny_config() };
        let m = train_embeddings(&tiny_corpus(), &cfg, 5).unwrap();
        let again = train_embeddings(&tiny_corpus(), &cfg, 5).unwrap();
        assert_eq!(m, again);
        assert!(m.output.iter().all(|&x| x == 0.0));
        let half = 0.5 / cfg.dim as f64;
        assert!(m.input.iter().all(|x| x.abs() <= half));
    }

    #[test]
    fn training_is_deterministic_and_seed_sensitive() {
        let a = train_embeddings(&tiny_corpus(), &tiny_config(), 1).unwrap();
        let b = train_embeddings(&tiny_corpus(), &tiny_config(), 1).unwrap();
        let c = train_embeddings(&tiny_corpus(), &tiny_config(), 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.input.iter().chain(&a.output).all(|x| x.is_finite()));
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let cfg = EmbeddingConfig { min_count: 100, ..tiny_config() };
        assert!(matches!(train_embeddings(&tiny_corpus(), &cfg, 0), Err(Error::EmptyVocabulary)));
    }

    #[test]
    fn lookup_known_unknown_and_pad() {
        let m = toy_model(&["aa", "bb"], &[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(m.lookup("bb"), &[3.0, 4.0]);
        assert_eq!(m.lookup("zz"), &[0.0, 0.0]);
        assert_eq!(m.lookup(crate::segmenter::PAD), &[0.0, 0.0]);
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - 0.707_106_781_186_547_5).abs() < 1e-9);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn nearest_examples() {
        let m = toy_model(&["xx", "yy", "zz"], &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let top = m.nearest(&[0.0, 1.0, 0.0], 1, &HashSet::new()).unwrap();
        assert_eq!(top, vec![("yy".to_string(), 1.0)]);
        let all = m.nearest(&[0.0, 1.0, 0.0], 10, &HashSet::new()).unwrap();
        assert_eq!(all.len(), 3);
        // zero ties resolve lexicographically
        assert_eq!(all[1].0, "xx");
        let ex: HashSet<String> = ["yy".to_string()].into();
        assert_eq!(m.nearest(&[0.0, 1.0, 0.0], 1, &ex).unwrap()[0].0, "xx");
    }

    #[test]
    fn nearest_matches_exhaustive_oracle() {
        let mut rng = util::rng(77);
        let words: Vec<String> = (0..20).map(|i| format!("w{i:02}")).collect();
        let vecs: Vec<f64> = (0..20 * 5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = EmbeddingModel::from_vectors(Vocabulary::from_ordered_words(words.clone()).unwrap(), 5, vecs).unwrap();
        for _ in 0..10 {
            let q: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut oracle: Vec<(String, f64)> = Vec::new();
            for (i, w) in words.iter().enumerate() {
                let v = m.vector(i);
                let c = v.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>()
                    / (v.iter().map(|a| a * a).sum::<f64>().sqrt() * q.iter().map(|a| a * a).sum::<f64>().sqrt());
                oracle.push((w.clone(), c));
            }
            oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let got = m.nearest(&q, 7, &HashSet::new()).unwrap();
            for (g, o) in got.iter().zip(&oracle) {
                assert_eq!(g.0, o.0);
                assert!((g.1 - o.1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_sampler_frequencies() {
        let s = NoiseSampler::new(&[8, 1], 0.75).unwrap();
        let mut rng = util::rng(2024);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| s.sample(&mut rng) == 0).count();
        let expected = 8f64.powf(0.75) / (8f64.powf(0.75) + 1.0);
        assert!((expected - 0.826).abs() < 1e-3);
        assert!((hits as f64 / n as f64 - expected).abs() < 0.01);
    }

    #[test]
    fn sample_excluding_never_returns_target() {
        let s = NoiseSampler::new(&[5, 5, 5], 0.75).unwrap();
        let mut rng = util::rng(0);
        assert!((0..1000).all(|_| s.sample_excluding(1, &mut rng) != Some(1)));
        let single = NoiseSampler::new(&[3], 0.75).unwrap();
        assert_eq!(single.sample_excluding(0, &mut rng), None);
    }

    #[test]
    fn trainer_step_applies_exact_gradient() {
        let d = 3;
        let mut rng = util::rng(4);
        let mut input: Vec<f64> = (0..4 * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut output: Vec<f64> = (0..4 * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (in0, out0) = (input.clone(), output.clone());
        let row = |v: &[f64], i: usize| v[i * d..(i + 1) * d].to_vec();
        let ctx = [0usize, 1];
        let (target, negs) = (2usize, [3usize]);
        let g = cbow_gradients(
            &[&row(&in0, 0), &row(&in0, 1)],
            &row(&out0, target),
            &[&row(&out0, 3)],
        );
        let lr = 0.1;
        let mut t = Trainer { dim: d, input: &mut input, output: &mut output, c: vec![0.0; d], grad_c: vec![0.0; d] };
        let loss = t.step(&ctx, target, &negs, lr);
        assert!((loss - g.loss).abs() < 1e-14);
        for k in 0..d {
            assert!((input[k] - (in0[k] - lr * g.context[k])).abs() < 1e-14);
            assert!((output[target * d + k] - (out0[target * d + k] - lr * g.target[k])).abs() < 1e-14);
            assert!((output[3 * d + k] - (out0[3 * d + k] - lr * g.negatives[0][k])).abs() < 1e-14);
        }
    }

    #[test]
    fn embedding_file_roundtrip_is_byte_identical() {
        let m = train_embeddings(&tiny_corpus(), &tiny_config(), 3).unwrap();
        let text = m.to_text();
        let back = EmbeddingModel::from_text(&text, Path::new("mem")).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.input, m.input);
        assert!(text.starts_with(&format!("{} 4\n", m.vocabulary().len())));
    }

    #[test]
    fn embedding_file_errors() {
        assert!(EmbeddingModel::from_text("2 2\naa 1 2\n", Path::new("f")).is_err());
        assert!(EmbeddingModel::from_text("1 2\naa 1\n", Path::new("f")).is_err());
        assert!(EmbeddingModel::from_text("1 2\naa 1 x\n", Path::new("f")).is_err());
    }

    fn rel_err(a: f64, n: f64) -> f64 {
        (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn gradients_match_central_differences(
            d in 1usize..=8, n_ctx in 1usize..=4, k in 1usize..=3, seed in any::<u64>()
        ) {
            let mut rng = util::rng(seed);
            let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
            let ctx: Vec<Vec<f64>> = (0..n_ctx).map(|_| draw(d)).collect();
            let target = draw(d);
            let negs: Vec<Vec<f64>> = (0..k).map(|_| draw(d)).collect();
            let loss_of = |ctx: &[Vec<f64>], target: &[f64], negs: &[Vec<f64>]| {
                let c: Vec<&[f64]> = ctx.iter().map(Vec::as_slice).collect();
                let n: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
                cbow_loss(&c, target, &n)
            };
            let c: Vec<&[f64]> = ctx.iter().map(Vec::as_slice).collect();
            let n: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
            let g = cbow_gradients(&c, &target, &n);
            prop_assert!((g.loss - loss_of(&ctx, &target, &negs)).abs() < 1e-12);
            let eps = 1e-5;
            for i in 0..d {
                // context vector 0
                let mut p = ctx.clone(); p[0][i] += eps;
                let mut m = ctx.clone(); m[0][i] -= eps;
                let num = (loss_of(&p, &target, &negs) - loss_of(&m, &target, &negs)) / (2.0 * eps);
                prop_assert!(rel_err(g.context[i], num) < 1e-4);
                let mut p = target.clone(); p[i] += eps;
                let mut m = target.clone(); m[i] -= eps;
                let num = (loss_of(&ctx, &p, &negs) - loss_of(&ctx, &m, &negs)) / (2.0 * eps);
                prop_assert!(rel_err(g.target[i], num) < 1e-4);
                for j in 0..k {
                    let mut p = negs.clone(); p[j][i] += eps;
                    let mut m = negs.clone(); m[j][i] -= eps;
                    let num = (loss_of(&ctx, &target, &p) - loss_of(&ctx, &target, &m)) / (2.0 * eps);
                    prop_assert!(rel_err(g.negatives[j][i], num) < 1e-4);
                }
            }
        }
    }
}
