#![allow(dead_code)]

use webfpr::corpus::{generate_synthetic, split_corpus, Corpus, Document, GeneratorConfig, Label};
use webfpr::derive_seed;
use webfpr::nn::TrainConfig;
use webfpr::pipeline::PipelineOptions;

/// Generator seed of the committed benchmark corpus.
pub const GEN_SEED: u64 = 42;

/// Default synthetic corpus split in half the way `webfpr gen-corpus` does.
pub fn benchmark_split() -> (Corpus, Corpus) {
    let corpus = generate_synthetic(&GeneratorConfig::default(), GEN_SEED).unwrap();
    let (mut train, mut test) = split_corpus(&corpus, 0.5, derive_seed(GEN_SEED, "split")).unwrap();
    train.tokenize_all(None);
    test.tokenize_all(None);
    (train, test)
}

/// Paper training settings with 50-dimensional embeddings.
pub fn desk_options() -> PipelineOptions {
    let mut o = PipelineOptions::default();
    o.embedding.dim = 50;
    o
}

pub fn small_batch(mut c: TrainConfig, batch: usize, epochs: usize) -> TrainConfig {
    c.batch_size = batch;
    c.max_epochs = epochs;
    c.patience = 5;
    c.learning_rate = 0.005;
    c
}

/// Positives repeat the seed words side by side; negatives mention a single
/// seed word inside unrelated text.
pub fn separable_corpus(prefix: &str, n: usize) -> Corpus {
    let seeds = ["online", "cart", "order", "shop"];
    let filler = ["river", "mountain", "history", "weather", "garden", "music", "school", "travel"];
    let mut docs = Vec::new();
    for i in 0..n {
        let f = |j: usize| filler[(i * 3 + j) % filler.len()];
        let (label, text) = if i % 4 == 0 {
            let text = format!(
                "{} {} online cart order shop {} {} shop order cart online {}",
                f(0),
                f(1),
                f(2),
                f(3),
                f(4)
            );
            (Label::Positive, text)
        } else {
            let text = format!(
                "{} {} {} {} {} {} {} {}",
                f(0),
                f(1),
                f(2),
                seeds[i % 4],
                f(3),
                f(4),
                f(5),
                f(6)
            );
            (Label::Negative, text)
        };
        docs.push(Document::new(format!("{prefix}{i:03}"), label, text));
    }
    let mut c = Corpus::new(docs).unwrap();
    c.tokenize_all(None);
    c
}

pub fn separable_options() -> PipelineOptions {
    let mut o = PipelineOptions::default();
    o.embedding.dim = 8;
    o.embedding.min_count = 1;
    o.embedding.window = 2;
    o.cnn = small_batch(o.cnn, 16, 40);
    o.mlp = small_batch(o.mlp, 16, 200);
    o
}

pub fn separable_seeds() -> Vec<String> {
    ["online", "cart", "order", "shop"].iter().map(|s| s.to_string()).collect()
}
