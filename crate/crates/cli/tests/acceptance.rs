//! Acceptance criteria 1-8. Runs without the libtest harness so the
//! PASS/FAIL line of every criterion is always printed; the process exits
//! nonzero if any criterion fails.
//!
//! Benchmark constants: generator seed 42 with the default generator
//! configuration, split in half under `derive_seed(42, "split")` exactly as
//! `webfpr gen-corpus --seed 42` does; pipeline and baseline runs use seeds
//! 1 to 5.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use webfpr::corpus::{generate_synthetic, split_corpus, Corpus, Document, GeneratorConfig};
use webfpr::derive_seed;
use webfpr::encoder::TdmScheme;
use webfpr::eval::{f_measure, marginal_report, metrics, Axis, ConfusionMatrix, GridAxes, GridResult, Metrics};
use webfpr::marker::Strategy;
use webfpr::nn::{conv1d_forward, gradient_check, softmax, Example, LayerSpec, Network};
use webfpr::pipeline::{
    adjusted_threshold, build_histogram_mlp, build_sentence_cnn, histogram_features, max_rule, run_pipeline,
    run_tdm_baseline, BaselineOptions, HyperConfig, PipelineOptions, Rule, ThresholdMode,
};

const GEN_SEED: u64 = 42;
const RUN_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

const GRAD_TOL: f64 = 1e-4;
const GRAD_EPS: f64 = 1e-5;
const SOFTMAX_TOL: f64 = 1e-9;
const CONV_TOL: f64 = 1e-12;
const TABLE_TOL: f64 = 0.01;
const MIN_MEDIAN_F: f64 = 0.75;
const MAX_PR_GAP: f64 = 0.15;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn benchmark_split() -> (Corpus, Corpus) {
    let corpus = generate_synthetic(&GeneratorConfig::default(), GEN_SEED).unwrap();
    let (mut train, mut test) = split_corpus(&corpus, 0.5, derive_seed(GEN_SEED, "split")).unwrap();
    train.tokenize_all(None);
    test.tokenize_all(None);
    (train, test)
}

fn desk_hyper() -> HyperConfig {
    HyperConfig {
        strategy: Strategy::Advanced,
        m: 30,
        k: 4,
        rule: Rule::Histogram,
        threshold_mode: ThresholdMode::Adjusted,
        ..HyperConfig::default()
    }
}

fn desk_options() -> PipelineOptions {
    let mut o = PipelineOptions::default();
    o.embedding.dim = 50;
    o
}

fn median(values: &[f64]) -> f64 {
    webfpr::eval::summarize(values).unwrap().median
}

fn architecture_anchors() -> Check {
    let cnn = Network::new((9, 300), &build_sentence_cnn(4).map_err(|e| e.to_string())?, 0).map_err(|e| e.to_string())?;
    let mut convs = Vec::new();
    let mut dense = Vec::new();
    for l in cnn.layers() {
        match l.spec {
            LayerSpec::Conv1D { filters, .. } => convs.push(filters),
            LayerSpec::Dense { units } => dense.push(units),
            LayerSpec::SoftmaxOutput { classes } => dense.push(classes),
            _ => {}
        }
    }
    ensure(convs == [45, 16], || format!("conv filters {convs:?}"))?;
    ensure(dense == [80, 500, 2], || format!("dense widths {dense:?}"))?;
    let flat = cnn.layers().iter().find(|l| l.spec == LayerSpec::Flatten).map(|l| l.output_shape);
    ensure(flat == Some((1, 80)), || format!("flatten output {flat:?}"))?;

    let mlp = Network::new((1, 10), &build_histogram_mlp(), 0).map_err(|e| e.to_string())?;
    let mut widths = vec![mlp.input_len()];
    for l in mlp.layers() {
        if let LayerSpec::Dense { units } | LayerSpec::SoftmaxOutput { classes: units } = l.spec {
            widths.push(units);
        }
    }
    ensure(widths == [10, 16, 8, 4, 2], || format!("histogram MLP widths {widths:?}"))?;
    Ok("cnn 45/16 filters, dense 80/500/2; mlp 10/16/8/4/2".into())
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize, len: usize, classes: usize) -> Vec<Example> {
    (0..n)
        .map(|_| Example {
            input: (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
            target: rng.random_range(0..classes),
        })
        .collect()
}

/// Fresh layers start with zero biases, which can leave a dense unit exactly
/// on the ReLU kink when its whole input is zero; random biases avoid that.
fn random_network(shape: (usize, usize), specs: &[LayerSpec], seed: u64, rng: &mut ChaCha8Rng) -> Result<Network, String> {
    let mut net = Network::new(shape, specs, seed).map_err(|e| e.to_string())?;
    for layer in net.layers_mut() {
        layer.biases.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    }
    Ok(net)
}

fn numerical_core() -> Check {
    let dense = [
        LayerSpec::Dense { units: 6 },
        LayerSpec::Relu,
        LayerSpec::Dense { units: 4 },
        LayerSpec::Relu,
        LayerSpec::SoftmaxOutput { classes: 3 },
    ];
    let conv = [
        LayerSpec::Conv1D { filters: 4, width: 3 },
        LayerSpec::Relu,
        LayerSpec::Conv1D { filters: 3, width: 3 },
        LayerSpec::Relu,
        LayerSpec::Flatten,
        LayerSpec::Dense { units: 5 },
        LayerSpec::Relu,
        LayerSpec::SoftmaxOutput { classes: 2 },
    ];
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network((1, 5), &dense, seed, &mut rng)?;
        let batch = random_batch(&mut rng, 4, 5, 3);
        worst = worst.max(gradient_check(&net, &batch, GRAD_EPS, 0.01).map_err(|e| e.to_string())?);
        let net = random_network((7, 3), &conv, seed, &mut rng)?;
        let batch = random_batch(&mut rng, 4, 21, 2);
        worst = worst.max(gradient_check(&net, &batch, GRAD_EPS, 0.01).map_err(|e| e.to_string())?);
    }
    ensure(worst < GRAD_TOL, || format!("gradient check relative error {worst:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut softmax_err: f64 = 0.0;
    for _ in 0..1000 {
        let logits: Vec<f64> = (0..rng.random_range(2..8)).map(|_| rng.random_range(-50.0..50.0)).collect();
        softmax_err = softmax_err.max((softmax(&logits).iter().sum::<f64>() - 1.0).abs());
    }
    ensure(softmax_err < SOFTMAX_TOL, || format!("softmax sum error {softmax_err:e}"))?;

    let mut conv_err: f64 = 0.0;
    for _ in 0..200 {
        let (n, c, f, w) = (rng.random_range(3..12), rng.random_range(1..5), rng.random_range(1..5), 3);
        let x: Vec<f64> = (0..n * c).map(|_| rng.random_range(-1.0..1.0)).collect();
        let wt: Vec<f64> = (0..f * w * c).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..f).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = conv1d_forward(&x, n, c, &wt, &b, w).map_err(|e| e.to_string())?;
        for p in 0..n - w + 1 {
            for fi in 0..f {
                let mut s = b[fi];
                for dp in 0..w {
                    for ch in 0..c {
                        s += x[(p + dp) * c + ch] * wt[fi * w * c + dp * c + ch];
                    }
                }
                conv_err = conv_err.max((got[p * f + fi] - s).abs());
            }
        }
    }
    ensure(conv_err < CONV_TOL, || format!("conv1d oracle error {conv_err:e}"))?;
    Ok(format!("grad rel err {worst:.2e}, softmax {softmax_err:.1e}, conv {conv_err:.1e}"))
}

fn metric_anchors() -> Check {
    // (F, P, R) anchor rows
    let rows = [
        ("SLAD", 0.60, 0.58, 0.62),
        ("SVM", 0.59, 0.55, 0.64),
        ("Deep Learning", 0.57, 0.47, 0.70),
        ("Random Forest", 0.55, 0.57, 0.53),
        ("Logistic", 0.53, 0.53, 0.53),
        ("ANN", 0.52, 0.52, 0.52),
        ("Boosting", 0.50, 0.50, 0.50),
        ("Bagging", 0.48, 0.53, 0.44),
        ("Naive Bayes", 0.46, 0.46, 0.46),
        ("pipeline top", 0.72, 0.73, 0.72),
    ];
    let mut worst: f64 = 0.0;
    for (name, f, p, r) in rows {
        let got = f_measure(p, r);
        ensure((got - f).abs() <= TABLE_TOL, || format!("{name}: F({p}, {r}) = {got:.4}, table {f}"))?;
        worst = worst.max((got - f).abs());
    }
    ensure(f_measure(0.5, 0.5) == 0.5, || "F(0.5, 0.5) != 0.5".into())?;
    let m = metrics(&ConfusionMatrix { tp: 1, fp: 1, tn: 1, fn_: 1 }).map_err(|e| e.to_string())?;
    ensure(m.f_measure == 0.5, || format!("{m:?}"))?;
    Ok(format!("{} table rows, max deviation {worst:.4}", rows.len()))
}

fn grid_arithmetic() -> Check {
    let axes = GridAxes::paper();
    let configs = axes.configs();
    ensure(configs.len() == 72, || format!("{} configurations", configs.len()))?;
    let dummy = Metrics {
        precision: 0.0,
        recall: 0.0,
        f_measure: 0.0,
        accuracy: 0.0,
    };
    let rows: Vec<GridResult> = configs
        .iter()
        .flat_map(|c| {
            (0..50).map(move |run| GridResult {
                config: *c,
                run,
                seed: run as u64,
                metrics: dummy,
            })
        })
        .collect();
    ensure(rows.len() == 3600, || format!("{} rows", rows.len()))?;
    let expected = [
        (Axis::Strategy, 1800),
        (Axis::M, 1200),
        (Axis::K, 1200),
        (Axis::Rule, 1800),
        (Axis::ThresholdMode, 1800),
    ];
    for (axis, nobs) in expected {
        let report = marginal_report(&rows, axis).map_err(|e| e.to_string())?;
        ensure(report.iter().all(|r| r.nobs == nobs), || {
            format!("{axis:?}: {:?}", report.iter().map(|r| r.nobs).collect::<Vec<_>>())
        })?;
        ensure(report.iter().map(|r| r.nobs).sum::<usize>() == 3600, || format!("{axis:?} does not partition"))?;
    }
    Ok("72 configurations, 3600 rows, Nobs 1800/1200".into())
}

fn fpr_mechanics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let n = rng.random_range(0..30);
        let probs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut best = 0.0;
        for &p in &probs {
            if p > best {
                best = p;
            }
        }
        ensure(max_rule(&probs) == best, || format!("max rule on {probs:?}"))?;

        let hist = histogram_features(&probs).map_err(|e| e.to_string())?;
        let mut counts = [0usize; 10];
        for &p in &probs {
            let mut bin = 9;
            for b in 0..10 {
                if p < (b + 1) as f64 / 10.0 {
                    bin = b;
                    break;
                }
            }
            counts[bin] += 1;
        }
        for b in 0..10 {
            let want = if n == 0 { 0.0 } else { counts[b] as f64 / n as f64 };
            ensure(hist[b] == want, || format!("histogram bin {b} on {probs:?}"))?;
        }
    }
    for _ in 0..1000 {
        let n = rng.random_range(1..60);
        let probs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let rate = rng.random_range(0.01..0.99);
        let t = adjusted_threshold(&probs, rate).map_err(|e| e.to_string())?;
        let err = |cut: f64| (probs.iter().filter(|&&p| p >= cut).count() as f64 / n as f64 - rate).abs();
        let best = probs.iter().map(|&c| err(c)).fold(f64::INFINITY, f64::min);
        ensure(err(t) <= best + 1e-12, || format!("threshold {t} on {n} probabilities at rate {rate}"))?;
    }
    Ok("1000 instances each for max, histogram and threshold".into())
}

fn synthetic_benchmark() -> Check {
    let (train, test) = benchmark_split();
    let mut fs_ = Vec::new();
    let mut gaps = Vec::new();
    let mut tdm = Vec::new();
    for &seed in &RUN_SEEDS {
        let (_, _, m) = run_pipeline(&train, &test, &desk_hyper(), &desk_options(), seed).map_err(|e| e.to_string())?;
        fs_.push(m.f_measure);
        gaps.push((m.precision - m.recall).abs());
        let (_, b) = run_tdm_baseline(&train, &test, TdmScheme::Frequency, &BaselineOptions::default(), seed)
            .map_err(|e| e.to_string())?;
        tdm.push(b.f_measure);
    }
    let (mf, mt) = (median(&fs_), median(&tdm));
    let gap = gaps.iter().copied().fold(0.0, f64::max);
    let detail = format!(
        "pipeline F {:?} median {mf:.3}; baseline F median {mt:.3}; max |P-R| {gap:.3}",
        fs_.iter().map(|f| (f * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    );
    ensure(mf >= MIN_MEDIAN_F, || format!("median F below {MIN_MEDIAN_F}: {detail}"))?;
    ensure(mf > mt, || format!("baseline not beaten: {detail}"))?;
    ensure(gap <= MAX_PR_GAP, || format!("precision/recall gap above {MAX_PR_GAP}: {detail}"))?;
    Ok(detail)
}

fn webfpr(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_webfpr"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("webfpr {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    fs::write(
        root.join("desk.cfg"),
        "embedding.dim = 50\nmarker.m = 30\ncorpus.train = data/train.jsonl\ncorpus.test = data/test.jsonl\n\
         grid.strategies = advanced\ngrid.ms = 30\ngrid.ks = 4\ngrid.rules = max\ngrid.threshold_modes = adjusted\n",
    )
    .map_err(|e| e.to_string())?;
    webfpr(&["gen-corpus", "--seed", "42", "--out-dir", "data"], root)?;
    let mut commands = 0;
    for run in ["a", "b"] {
        let o = |name: &str| format!("{run}/{name}");
        let steps: Vec<Vec<String>> = vec![
            vec!["gen-corpus".into(), "--seed".into(), "42".into(), "--out-dir".into(), o("gen")],
            vec!["train-embeddings".into(), "--seed".into(), "3".into(), "--out-dir".into(), o("emb")],
            vec!["markers".into(), "--embedding".into(), o("emb/embedding.txt"), "--out-dir".into(), o("emb")],
            vec![
                "segment".into(),
                "--corpus".into(),
                "data/train.jsonl".into(),
                "--markers".into(),
                o("emb/markers.txt"),
                "--out-dir".into(),
                o("seg"),
            ],
            vec!["train".into(), "--seed".into(), "3".into(), "--out-dir".into(), o("model")],
            vec![
                "predict".into(),
                "--model".into(),
                o("model"),
                "--corpus".into(),
                "data/test.jsonl".into(),
                "--out-dir".into(),
                o("pred"),
            ],
            vec!["evaluate".into(), "--predictions".into(), o("pred/predictions.csv"), "--out-dir".into(), o("pred")],
            vec!["baseline-tdm".into(), "--seed".into(), "3".into(), "--out-dir".into(), o("tdm")],
            vec!["grid".into(), "--runs".into(), "1".into(), "--seed".into(), "7".into(), "--out-dir".into(), o("grid")],
            vec!["report".into(), "--results".into(), o("grid/results.csv"), "--out-dir".into(), o("report")],
        ];
        commands = steps.len();
        for step in steps {
            let mut args: Vec<&str> = step.iter().map(String::as_str).collect();
            args.extend(["--config", "desk.cfg"]);
            webfpr(&args, root)?;
        }
    }
    let a = files_under(&root.join("a"));
    let b = files_under(&root.join("b"));
    ensure(a.keys().eq(b.keys()), || "runs wrote different file sets".into())?;
    for (path, bytes) in &a {
        ensure(b[path] == *bytes, || format!("{} differs between runs", path.display()))?;
    }
    Ok(format!("{commands} commands, {} artifact files byte-identical", a.len()))
}

fn isolation() -> Check {
    let (train, test) = benchmark_split();
    let docs = test
        .documents()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let text = if i % 2 == 0 { format!("{} com0001 com0002 gen0003", d.text) } else { "gen0001 gen0002".into() };
            Document::new(d.id.clone(), d.label, text)
        })
        .collect();
    let mut perturbed = Corpus::new(docs).map_err(|e| e.to_string())?;
    perturbed.tokenize_all(None);
    let (a, _, _) = run_pipeline(&train, &test, &desk_hyper(), &desk_options(), 1).map_err(|e| e.to_string())?;
    let (b, _, _) = run_pipeline(&train, &perturbed, &desk_hyper(), &desk_options(), 1).map_err(|e| e.to_string())?;
    ensure(a.embedding.to_text() == b.embedding.to_text(), || "embedding file changed".into())?;
    ensure(a.markers.to_text() == b.markers.to_text(), || "marker file changed".into())?;
    ensure(a.cnn.to_json() == b.cnn.to_json(), || "CNN parameters changed".into())?;
    ensure(
        a.mlp.as_ref().map(|n| n.to_json()) == b.mlp.as_ref().map(|n| n.to_json()),
        || "histogram MLP changed".into(),
    )?;
    ensure(a.threshold.to_bits() == b.threshold.to_bits(), || "threshold changed".into())?;
    Ok(format!("artifacts identical under a perturbed test set (threshold {:.6})", a.threshold))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Check, Duration); 8] = [
        (1, "architecture anchors", architecture_anchors, Duration::from_secs(1)),
        (2, "numerical core", numerical_core, Duration::from_secs(30)),
        (3, "metric anchors", metric_anchors, Duration::from_secs(1)),
        (4, "grid arithmetic", grid_arithmetic, Duration::from_secs(1)),
        (5, "aggregation mechanics", fpr_mechanics, Duration::from_secs(10)),
        (6, "synthetic benchmark", synthetic_benchmark, Duration::from_secs(600)),
        (7, "determinism", determinism, Duration::from_secs(120)),
        (8, "train/test isolation", isolation, Duration::from_secs(300)),
    ];
    let mut failed = Vec::new();
    for (id, name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|d| {
            if elapsed <= budget {
                Ok(d)
            } else {
                Err(format!("{d}; took {elapsed:.1?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(detail) => println!("PASS criterion {id} ({name}, {elapsed:.1?}): {detail}"),
            Err(why) => {
                println!("FAIL criterion {id} ({name}, {elapsed:.1?}): {why}");
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 8 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
