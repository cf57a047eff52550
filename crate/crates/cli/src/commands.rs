use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use webfpr::corpus::{generate_synthetic, load_stopwords, split_corpus, Corpus, GeneratorConfig};
use webfpr::derive_seed;
use webfpr::embedding::{train_embeddings as fit_embeddings, EmbeddingModel};
use webfpr::eval::{emit_report, grid_search, results_from_csv, results_to_csv, ConfusionMatrix, Metrics, RESULTS_FILE};
use webfpr::marker::MarkerSet;
use webfpr::pipeline::{
    evaluate_predictions, fit, fit_with, load_predictions, recruit_markers, run_tdm_baseline, save_predictions,
    DocPrediction, PipelineModel,
};
use webfpr::segmenter::{save_segments, segment_corpus};
use webfpr::{Error, Result};

use crate::settings::Settings;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const META_FILE: &str = "corpus.meta.json";
pub const TRAIN_FILE: &str = "train.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const EMBEDDING_FILE: &str = "embedding.txt";
pub const MARKER_FILE: &str = "markers.txt";
pub const SEGMENTS_FILE: &str = "segments.jsonl";
pub const COVERAGE_FILE: &str = "coverage.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const METRICS_FILE: &str = "metrics.json";

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialize json");
    s.push('\n');
    s
}

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("no {key} corpus: pass --{key} or set corpus.{key}")))
}

/// Reads a corpus and tokenizes it with the configured stopwords.
fn read_corpus(settings: &Settings, path: &Path) -> Result<Corpus> {
    let stopwords = match &settings.corpus.stopwords {
        Some(p) => Some(load_stopwords(p)?),
        None => None,
    };
    let mut corpus = Corpus::load_jsonl(path)?;
    corpus.tokenize_all(stopwords.as_ref());
    Ok(corpus)
}

#[derive(Serialize)]
struct CorpusMeta<'a> {
    generator: &'a GeneratorConfig,
    seed: u64,
    test_fraction: f64,
    split_seed: u64,
    documents: usize,
    train_documents: usize,
    test_documents: usize,
}

pub fn gen_corpus(settings: &Settings, seed: u64, out: &Path) -> Result<()> {
    let corpus = generate_synthetic(&settings.generator, seed)?;
    // the generator consumes `seed` itself; an equal split seed would align the two shuffles
    let split_seed = derive_seed(seed, "split");
    let (train, test) = split_corpus(&corpus, settings.corpus.test_fraction, split_seed)?;
    out_dir(out)?;
    write(&out.join(CORPUS_FILE), &corpus.to_jsonl())?;
    write(&out.join(TRAIN_FILE), &train.to_jsonl())?;
    write(&out.join(TEST_FILE), &test.to_jsonl())?;
    let meta = CorpusMeta {
        generator: &settings.generator,
        seed,
        test_fraction: settings.corpus.test_fraction,
        split_seed,
        documents: corpus.len(),
        train_documents: train.len(),
        test_documents: test.len(),
    };
    write(&out.join(META_FILE), &pretty_json(&meta))
}

pub fn train_embeddings(settings: &Settings, seed: u64, out: &Path) -> Result<()> {
    let train = read_corpus(settings, required(&settings.corpus.train, "train")?)?;
    // same stream as the embedding stage of `train --seed`
    let model = fit_embeddings(&train, &settings.embedding, derive_seed(seed, "embedding"))?;
    eprintln!("vocabulary: {} words, dimension {}", model.vocabulary().len(), model.dim());
    out_dir(out)?;
    write(&out.join(EMBEDDING_FILE), &model.to_text())
}

pub fn markers(settings: &Settings, embedding: &Path, out: &Path) -> Result<()> {
    let model = EmbeddingModel::load(embedding)?;
    let markers = recruit_markers(&model, &settings.hyper(), &settings.pipeline_options())?;
    for (word, score) in markers.markers() {
        println!("{word}\t{score:.6}");
    }
    out_dir(out)?;
    write(&out.join(MARKER_FILE), &markers.to_text())
}

pub fn segment(settings: &Settings, corpus: &Path, markers: &Path, out: &Path) -> Result<()> {
    let corpus = read_corpus(settings, corpus)?;
    let markers = MarkerSet::load(markers)?;
    let seg = segment_corpus(&corpus, &markers, settings.pipeline.k)?;
    let covered = seg.coverage.values().filter(|&&n| n > 0).count();
    eprintln!(
        "{} segments; {covered} of {} documents contain a marker",
        seg.segments.len(),
        corpus.len()
    );
    out_dir(out)?;
    let path = out.join(SEGMENTS_FILE);
    save_segments(&seg.segments, &path)?;
    eprintln!("wrote {}", path.display());
    let mut csv = String::from("doc_id,segments\n");
    for (id, n) in &seg.coverage {
        let _ = writeln!(csv, "{id},{n}");
    }
    write(&out.join(COVERAGE_FILE), &csv)
}

pub fn train(
    settings: &Settings,
    embedding: Option<&Path>,
    markers: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let train = read_corpus(settings, required(&settings.corpus.train, "train")?)?;
    let hyper = settings.hyper();
    let options = settings.pipeline_options();
    let model = match embedding {
        None => fit(&train, &hyper, &options, seed)?,
        Some(path) => {
            let emb = EmbeddingModel::load(path)?;
            let markers = match markers {
                Some(p) => MarkerSet::load(p)?,
                None => recruit_markers(&emb, &hyper, &options)?,
            };
            fit_with(&train, emb, markers, &hyper, &options, seed)?
        }
    };
    eprintln!("threshold {:.6}", model.threshold);
    model.save(out)?;
    eprintln!("wrote model bundle {}", out.display());
    Ok(())
}

pub fn predict(settings: &Settings, model: &Path, corpus: &Path, out: &Path) -> Result<()> {
    let model = PipelineModel::load(model)?;
    let corpus = read_corpus(settings, corpus)?;
    let predictions = model.predict(&corpus)?;
    out_dir(out)?;
    let path = out.join(PREDICTIONS_FILE);
    save_predictions(&predictions, &path)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct MetricsFile {
    #[serde(flatten)]
    confusion: ConfusionMatrix,
    #[serde(flatten)]
    metrics: Metrics,
}

fn write_metrics(predictions: &[DocPrediction], metrics: Metrics, out: &Path) -> Result<()> {
    let file = MetricsFile {
        confusion: ConfusionMatrix::from_labels(predictions.iter().map(|p| (p.predicted, p.gold))),
        metrics,
    };
    let json = pretty_json(&file);
    print!("{json}");
    out_dir(out)?;
    write(&out.join(METRICS_FILE), &json)
}

pub fn evaluate(predictions: &Path, out: &Path) -> Result<()> {
    let predictions = load_predictions(predictions)?;
    let metrics = evaluate_predictions(&predictions)?;
    write_metrics(&predictions, metrics, out)
}

pub fn baseline_tdm(settings: &Settings, seed: u64, out: &Path) -> Result<()> {
    let train = read_corpus(settings, required(&settings.corpus.train, "train")?)?;
    let test = read_corpus(settings, required(&settings.corpus.test, "test")?)?;
    let (predictions, metrics) = run_tdm_baseline(
        &train,
        &test,
        settings.baseline.scheme,
        &settings.baseline_options(),
        seed,
    )?;
    out_dir(out)?;
    let path = out.join(PREDICTIONS_FILE);
    save_predictions(&predictions, &path)?;
    eprintln!("wrote {}", path.display());
    write_metrics(&predictions, metrics, out)
}

pub fn grid(settings: &Settings, seed: u64, out: &Path) -> Result<()> {
    let train = read_corpus(settings, required(&settings.corpus.train, "train")?)?;
    let test = read_corpus(settings, required(&settings.corpus.test, "test")?)?;
    let axes = settings.grid_axes();
    let options = settings.grid_options(seed);
    eprintln!(
        "{} configurations x {} runs on {} workers",
        axes.configs().len(),
        options.runs_per_config,
        options.workers
    );
    let results = grid_search(&train, &test, &axes, &options)?;
    out_dir(out)?;
    write(&out.join(RESULTS_FILE), &results_to_csv(&results))
}

pub fn report(results: &Path, out: &Path) -> Result<()> {
    let src = fs::read_to_string(results).map_err(|e| Error::Io {
        path: results.to_path_buf(),
        source: e,
    })?;
    let rows = results_from_csv(&src, results)?;
    out_dir(out)?;
    let files = emit_report(&rows, out)?;
    for path in [files.results, files.marginals, files.top, files.boxplot, files.density] {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
