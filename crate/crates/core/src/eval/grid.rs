use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{summarize, Metrics, Summary};
use crate::corpus::Corpus;
use crate::embedding::train_embeddings;
use crate::marker::{MarkerSet, Strategy};
use crate::pipeline::{
    evaluate_predictions, fit_with, recruit_markers, HyperConfig, PipelineOptions, Rule, ThresholdMode,
};
use crate::util;
use crate::{Error, Result};

/// One point of the grid: the five searchable hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConfigKey {
    pub strategy: Strategy,
    pub m: usize,
    pub k: usize,
    pub rule: Rule,
    pub threshold_mode: ThresholdMode,
}

impl ConfigKey {
    pub fn hyper(&self, seeds: &[String]) -> HyperConfig {
        HyperConfig {
            strategy: self.strategy,
            m: self.m,
            k: self.k,
            rule: self.rule,
            threshold_mode: self.threshold_mode,
            seeds: seeds.to_vec(),
        }
    }

    pub fn of(hyper: &HyperConfig) -> Self {
        ConfigKey {
            strategy: hyper.strategy,
            m: hyper.m,
            k: hyper.k,
            rule: hyper.rule,
            threshold_mode: hyper.threshold_mode,
        }
    }

    pub fn value(&self, axis: Axis) -> String {
        match axis {
            Axis::Strategy => self.strategy.to_string(),
            Axis::M => self.m.to_string(),
            Axis::K => self.k.to_string(),
            Axis::Rule => self.rule.to_string(),
            Axis::ThresholdMode => self.threshold_mode.to_string(),
        }
    }

    /// `strategy=…,m=…,k=…,rule=…,threshold_mode=…`
    pub fn label(&self) -> String {
        Axis::ALL
            .iter()
            .map(|a| format!("{}={}", a.as_str(), self.value(*a)))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl std::fmt::Display for ConfigKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Strategy,
    M,
    K,
    Rule,
    ThresholdMode,
}

impl Axis {
    pub const ALL: [Axis; 5] = [Axis::Strategy, Axis::M, Axis::K, Axis::Rule, Axis::ThresholdMode];

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Strategy => "strategy",
            Axis::M => "m",
            Axis::K => "k",
            Axis::Rule => "rule",
            Axis::ThresholdMode => "threshold_mode",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown grid axis '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxes {
    pub strategies: Vec<Strategy>,
    pub ms: Vec<usize>,
    pub ks: Vec<usize>,
    pub rules: Vec<Rule>,
    pub threshold_modes: Vec<ThresholdMode>,
}

impl GridAxes {
    /// Two strategies, three marker counts, three half-widths, two rules and
    /// two threshold modes: 72 configurations.
    pub fn paper() -> Self {
        GridAxes {
            strategies: vec![Strategy::Simple, Strategy::Advanced],
            ms: vec![50, 100, 150],
            ks: vec![2, 4, 8],
            rules: vec![Rule::Max, Rule::Histogram],
            threshold_modes: vec![ThresholdMode::Unadjusted, ThresholdMode::Adjusted],
        }
    }

    /// Two values per axis sized for a laptop: 32 configurations.
    pub fn desk() -> Self {
        GridAxes {
            strategies: vec![Strategy::Simple, Strategy::Advanced],
            ms: vec![20, 30],
            ks: vec![2, 4],
            rules: vec![Rule::Max, Rule::Histogram],
            threshold_modes: vec![ThresholdMode::Unadjusted, ThresholdMode::Adjusted],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lens = [
            self.strategies.len(),
            self.ms.len(),
            self.ks.len(),
            self.rules.len(),
            self.threshold_modes.len(),
        ];
        if let Some(pos) = lens.iter().position(|&n| n == 0) {
            return Err(Error::invalid(format!("grid axis '{}' has no values", Axis::ALL[pos].as_str())));
        }
        Ok(())
    }

    /// Cartesian product in axis order, last axis varying fastest.
    pub fn configs(&self) -> Vec<ConfigKey> {
        let mut out = Vec::new();
        for &strategy in &self.strategies {
            for &m in &self.ms {
                for &k in &self.ks {
                    for &rule in &self.rules {
                        for &threshold_mode in &self.threshold_modes {
                            out.push(ConfigKey {
                                strategy,
                                m,
                                k,
                                rule,
                                threshold_mode,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    pub runs_per_config: usize,
    pub base_seed: u64,
    pub seeds: Vec<String>,
    pub pipeline: PipelineOptions,
    /// Worker threads; results do not depend on it.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub config: ConfigKey,
    pub run: usize,
    pub seed: u64,
    pub metrics: Metrics,
}

/// Seed of run `run` of `config`: `base_seed + run + (fnv1a(label) mod 10⁶)`.
pub fn config_seed(base_seed: u64, run: usize, config: &ConfigKey) -> u64 {
    let offset = util::fnv1a(config.label().as_bytes()) % 1_000_000;
    base_seed.wrapping_add(run as u64).wrapping_add(offset)
}

/// Runs every configuration `runs_per_config` times. One embedding model is
/// trained for the whole grid, and one marker set per `(strategy, m)`; the
/// networks and the threshold are refitted on every run.
pub fn grid_search(train: &Corpus, test: &Corpus, axes: &GridAxes, options: &GridOptions) -> Result<Vec<GridResult>> {
    axes.validate()?;
    options.pipeline.validate()?;
    let configs = axes.configs();
    for c in &configs {
        c.hyper(&options.seeds).validate()?;
    }
    let embedding = train_embeddings(
        train,
        &options.pipeline.embedding,
        util::derive_seed(options.base_seed, "embedding"),
    )?;
    let mut markers: BTreeMap<(Strategy, usize), MarkerSet> = BTreeMap::new();
    for c in &configs {
        if let std::collections::btree_map::Entry::Vacant(slot) = markers.entry((c.strategy, c.m)) {
            slot.insert(recruit_markers(&embedding, &c.hyper(&options.seeds), &options.pipeline)?);
        }
    }

    let jobs: Vec<(ConfigKey, usize)> = configs
        .iter()
        .flat_map(|c| (0..options.runs_per_config).map(move |r| (*c, r)))
        .collect();
    let run_job = |&(config, run): &(ConfigKey, usize)| -> Result<GridResult> {
        let seed = config_seed(options.base_seed, run, &config);
        let hyper = config.hyper(&options.seeds);
        let model = fit_with(
            train,
            embedding.clone(),
            markers[&(config.strategy, config.m)].clone(),
            &hyper,
            &options.pipeline,
            seed,
        )?;
        let metrics = evaluate_predictions(&model.predict(test)?)?;
        Ok(GridResult {
            config,
            run,
            seed,
            metrics,
        })
    };

    let workers = options.workers.clamp(1, jobs.len().max(1));
    let slots: Mutex<Vec<Option<Result<GridResult>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let out = run_job(&jobs[i]);
                let failed = out.is_err();
                slots.lock().expect("result slots")[i] = Some(out);
                if failed {
                    next.store(jobs.len(), Ordering::Relaxed);
                }
            });
        }
    });
    let slots = slots.into_inner().expect("result slots");
    let mut results = Vec::with_capacity(jobs.len());
    for slot in slots {
        match slot {
            Some(r) => results.push(r?),
            None => break,
        }
    }
    if results.len() != jobs.len() {
        return Err(Error::invalid("grid search stopped before completing every run"));
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalRow {
    pub axis: String,
    pub value: String,
    pub summary: Summary,
    pub nobs: usize,
}

/// F-measure summary per value of `axis`, values in ascending order.
pub fn marginal_report(results: &[GridResult], axis: Axis) -> Result<Vec<MarginalRow>> {
    if results.is_empty() {
        return Err(Error::NoResults);
    }
    let mut groups: BTreeMap<ConfigKeyPart, Vec<f64>> = BTreeMap::new();
    for r in results {
        groups.entry(ConfigKeyPart::of(&r.config, axis)).or_default().push(r.metrics.f_measure);
    }
    groups
        .into_iter()
        .map(|(part, fs)| {
            Ok(MarginalRow {
                axis: axis.as_str().to_string(),
                value: part.to_string(),
                summary: summarize(&fs)?,
                nobs: fs.len(),
            })
        })
        .collect()
}

/// Sortable projection of a config onto one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ConfigKeyPart {
    Strategy(Strategy),
    Count(usize),
    Rule(Rule),
    Threshold(ThresholdMode),
}

impl ConfigKeyPart {
    fn of(c: &ConfigKey, axis: Axis) -> Self {
        match axis {
            Axis::Strategy => ConfigKeyPart::Strategy(c.strategy),
            Axis::M => ConfigKeyPart::Count(c.m),
            Axis::K => ConfigKeyPart::Count(c.k),
            Axis::Rule => ConfigKeyPart::Rule(c.rule),
            Axis::ThresholdMode => ConfigKeyPart::Threshold(c.threshold_mode),
        }
    }
}

impl std::fmt::Display for ConfigKeyPart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigKeyPart::Strategy(s) => write!(f, "{s}"),
            ConfigKeyPart::Count(n) => write!(f, "{n}"),
            ConfigKeyPart::Rule(r) => write!(f, "{r}"),
            ConfigKeyPart::Threshold(t) => write!(f, "{t}"),
        }
    }
}
