//! Run configuration: one tree of typed settings, filled from defaults, then a
//! flat `key = value` file, then `--set key=value` flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use webfpr::corpus::GeneratorConfig;
use webfpr::embedding::EmbeddingConfig;
use webfpr::encoder::TdmScheme;
use webfpr::eval::{GridAxes, GridOptions};
use webfpr::marker::{AdvancedParams, Strategy};
use webfpr::nn::TrainConfig;
use webfpr::pipeline::{
    default_seeds, BaselineOptions, HyperConfig, PipelineOptions, Rule, ThresholdMode,
};
use webfpr::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSettings {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// One stopword per line; applied to every corpus the command reads.
    pub stopwords: Option<PathBuf>,
    /// Share of the generated corpus written to `test.jsonl`.
    pub test_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerSettings {
    pub strategy: Strategy,
    pub m: usize,
    pub seeds: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSettings {
    pub k: usize,
    pub rule: Rule,
    pub threshold_mode: ThresholdMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSettings {
    pub scheme: TdmScheme,
    pub max_terms: usize,
    pub side: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub threshold: f64,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    pub strategies: Vec<Strategy>,
    pub ms: Vec<usize>,
    pub ks: Vec<usize>,
    pub rules: Vec<Rule>,
    pub threshold_modes: Vec<ThresholdMode>,
    pub runs: usize,
    /// 0 picks the number of available cores.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub corpus: CorpusSettings,
    pub generator: GeneratorConfig,
    pub embedding: EmbeddingConfig,
    pub marker: MarkerSettings,
    pub advanced: AdvancedParams,
    pub pipeline: PipelineSettings,
    pub cnn: TrainConfig,
    pub mlp: TrainConfig,
    pub baseline: BaselineSettings,
    pub grid: GridSettings,
}

impl Default for Settings {
    fn default() -> Self {
        let hyper = HyperConfig::default();
        let options = PipelineOptions::default();
        let baseline = BaselineOptions::default();
        let axes = GridAxes::desk();
        Settings {
            corpus: CorpusSettings {
                train: None,
                test: None,
                stopwords: None,
                test_fraction: 0.5,
            },
            generator: GeneratorConfig::default(),
            embedding: options.embedding,
            marker: MarkerSettings {
                strategy: hyper.strategy,
                m: hyper.m,
                seeds: default_seeds(),
            },
            advanced: options.advanced,
            pipeline: PipelineSettings {
                k: hyper.k,
                rule: hyper.rule,
                threshold_mode: hyper.threshold_mode,
            },
            cnn: options.cnn,
            mlp: options.mlp,
            baseline: BaselineSettings {
                scheme: TdmScheme::Frequency,
                max_terms: baseline.max_terms,
                side: baseline.side,
                hidden: baseline.hidden,
                dropout: baseline.dropout,
                threshold: baseline.threshold,
                train: baseline.train,
            },
            grid: GridSettings {
                strategies: axes.strategies,
                ms: axes.ms,
                ks: axes.ks,
                rules: axes.rules,
                threshold_modes: axes.threshold_modes,
                runs: 5,
                workers: 0,
            },
        }
    }
}

/// Sections whose `seed` key is derived from the command's `--seed`.
const SEEDED_SECTIONS: [&str; 3] = ["cnn", "mlp", "baseline.train"];

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(src: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(parse_error(path, i + 1, format!("expected key = value, found '{line}'")));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(parse_error(path, i + 1, "empty key"));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Converts `raw` to JSON, typed after the value it replaces.
fn typed_value(current: &Value, raw: &str) -> std::result::Result<Value, String> {
    let scalar = |like: &Value, raw: &str| -> std::result::Result<Value, String> {
        match like {
            Value::Bool(_) => raw.parse::<bool>().map(Value::Bool).map_err(|_| format!("'{raw}' is not a boolean")),
            Value::Number(n) if n.is_u64() => raw
                .parse::<u64>()
                .map(Value::from)
                .map_err(|_| format!("'{raw}' is not a non-negative integer")),
            Value::Number(_) => raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Value::from)
                .ok_or_else(|| format!("'{raw}' is not a finite number")),
            Value::Null => Ok(match raw {
                "" | "none" => Value::Null,
                _ => raw
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map_or_else(|| Value::String(raw.into()), Value::from),
            }),
            _ => Ok(Value::String(raw.into())),
        }
    };
    match current {
        Value::Array(items) => {
            let like = items.first().cloned().unwrap_or(Value::String(String::new()));
            raw.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| scalar(&like, s))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Value::Array)
        }
        Value::Object(_) => Err("names a section, not a setting".into()),
        // optional fields keep accepting "none" after holding a value; required ones fail on deserialize
        _ if raw == "none" => Ok(Value::Null),
        other => scalar(other, raw),
    }
}

impl Settings {
    /// Applies overrides in order; later keys win.
    pub fn apply(&mut self, overrides: &[(String, String)]) -> Result<()> {
        let mut tree = serde_json::to_value(&*self).expect("serialize settings");
        for (key, raw) in overrides {
            if let Some(section) = SEEDED_SECTIONS.iter().find(|s| key == &format!("{s}.seed")) {
                return Err(Error::InvalidArgument(format!(
                    "setting '{key}' is derived from --seed and cannot be set ({section})"
                )));
            }
            let mut node = &mut tree;
            for part in key.split('.') {
                node = node
                    .as_object_mut()
                    .and_then(|o| o.get_mut(part))
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown setting '{key}'")))?;
            }
            *node = typed_value(node, raw).map_err(|m| Error::InvalidArgument(format!("setting '{key}': {m}")))?;
        }
        *self = serde_json::from_value(tree).map_err(|e| Error::InvalidArgument(format!("settings: {e}")))?;
        Ok(())
    }

    pub fn hyper(&self) -> HyperConfig {
        HyperConfig {
            strategy: self.marker.strategy,
            m: self.marker.m,
            k: self.pipeline.k,
            rule: self.pipeline.rule,
            threshold_mode: self.pipeline.threshold_mode,
            seeds: self.marker.seeds.clone(),
        }
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            embedding: self.embedding.clone(),
            advanced: self.advanced,
            cnn: self.cnn.clone(),
            mlp: self.mlp.clone(),
        }
    }

    pub fn baseline_options(&self) -> BaselineOptions {
        let b = &self.baseline;
        BaselineOptions {
            max_terms: b.max_terms,
            side: b.side,
            hidden: b.hidden,
            dropout: b.dropout,
            threshold: b.threshold,
            train: b.train.clone(),
        }
    }

    pub fn grid_axes(&self) -> GridAxes {
        let g = &self.grid;
        GridAxes {
            strategies: g.strategies.clone(),
            ms: g.ms.clone(),
            ks: g.ks.clone(),
            rules: g.rules.clone(),
            threshold_modes: g.threshold_modes.clone(),
        }
    }

    pub fn grid_options(&self, base_seed: u64) -> GridOptions {
        let workers = match self.grid.workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        };
        GridOptions {
            runs_per_config: self.grid.runs,
            base_seed,
            seeds: self.marker.seeds.clone(),
            pipeline: self.pipeline_options(),
            workers,
        }
    }

    /// Checks every section, whichever command runs.
    pub fn validate(&self) -> Result<()> {
        let f = self.corpus.test_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidArgument(format!("corpus.test_fraction {f} outside (0, 1)")));
        }
        self.generator.validate()?;
        self.hyper().validate()?;
        self.pipeline_options().validate()?;
        self.baseline_options().validate()?;
        let axes = self.grid_axes();
        axes.validate()?;
        for config in axes.configs() {
            config.hyper(&self.marker.seeds).validate()?;
        }
        if self.grid.runs == 0 {
            return Err(Error::InvalidArgument("grid.runs must be >= 1".into()));
        }
        Ok(())
    }

    /// Flat `key = value` rendering of every setting, in a stable order.
    pub fn to_flat(&self) -> Vec<(String, String)> {
        fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
            match v {
                Value::Object(map) => {
                    for (k, child) in map {
                        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                        walk(&key, child, out);
                    }
                }
                Value::Array(items) => {
                    let parts: Vec<String> = items.iter().map(scalar_text).collect();
                    out.push((prefix.to_string(), parts.join(",")));
                }
                other => out.push((prefix.to_string(), scalar_text(other))),
            }
        }
        fn scalar_text(v: &Value) -> String {
            match v {
                Value::String(s) => s.clone(),
                Value::Null => "none".into(),
                other => other.to_string(),
            }
        }
        let mut out = Vec::new();
        walk("", &serde_json::to_value(self).expect("serialize settings"), &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pairs: &[(&str, &str)]) -> Result<Settings> {
        let mut s = Settings::default();
        let owned: Vec<(String, String)> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        s.apply(&owned)?;
        Ok(s)
    }

    #[test]
    fn defaults_are_valid_and_mirror_the_best_configuration() {
        let s = Settings::default();
        s.validate().unwrap();
        assert_eq!(s.hyper(), HyperConfig::default());
    }

    #[test]
    fn dotted_keys_reach_nested_values() {
        let s = set(&[
            ("embedding.dim", "50"),
            ("marker.m", "30"),
            ("marker.strategy", "simple"),
            ("marker.seeds", "com0001, com0002"),
            ("pipeline.k", "2"),
            ("cnn.dropout", "0.3"),
            ("baseline.train.batch_size", "64"),
            ("grid.ms", "20,40"),
            ("corpus.train", "data/train.jsonl"),
        ])
        .unwrap();
        assert_eq!(s.embedding.dim, 50);
        assert_eq!(s.marker.m, 30);
        assert_eq!(s.marker.strategy, Strategy::Simple);
        assert_eq!(s.marker.seeds, ["com0001", "com0002"]);
        assert_eq!(s.pipeline.k, 2);
        assert_eq!(s.cnn.dropout, Some(0.3));
        assert_eq!(s.baseline.train.batch_size, 64);
        assert_eq!(s.grid.ms, [20, 40]);
        assert_eq!(s.corpus.train.as_deref(), Some(Path::new("data/train.jsonl")));
        assert_eq!(set(&[("cnn.dropout", "0.3"), ("cnn.dropout", "none")]).unwrap().cnn.dropout, None);
    }

    #[test]
    fn bad_keys_and_values_rejected() {
        for (k, v) in [
            ("embedding.dims", "50"),
            ("embedding", "50"),
            ("embedding.dim", "-3"),
            ("embedding.dim", "ten"),
            ("marker.strategy", "clever"),
            ("cnn.learning_rate", "inf"),
            ("cnn.seed", "4"),
            ("nothing", "1"),
        ] {
            assert!(set(&[(k, v)]).is_err(), "{k}={v}");
        }
    }

    #[test]
    fn validation_catches_cross_field_errors() {
        assert!(set(&[("marker.m", "2")]).unwrap().validate().is_err());
        assert!(set(&[("pipeline.k", "1")]).unwrap().validate().is_err());
        assert!(set(&[("grid.ks", "1,4")]).unwrap().validate().is_err());
        assert!(set(&[("corpus.test_fraction", "1")]).unwrap().validate().is_err());
        assert!(set(&[("baseline.max_terms", "5000")]).unwrap().validate().is_err());
    }

    #[test]
    fn config_file_syntax() {
        let src = "# desk run\nembedding.dim = 50\n\nmarker.m=30 # inline\n";
        let kv = parse_config(src, Path::new("x.cfg")).unwrap();
        assert_eq!(kv, [("embedding.dim".into(), "50".into()), ("marker.m".into(), "30".into())]);
        let err = parse_config("a = 1\nbroken\n", Path::new("x.cfg")).unwrap_err();
        assert!(err.to_string().contains("x.cfg:2"));
    }

    #[test]
    fn flat_rendering_round_trips() {
        let s = set(&[("embedding.dim", "50"), ("grid.rules", "max")]).unwrap();
        let mut back = Settings::default();
        let flat: Vec<(String, String)> = s
            .to_flat()
            .into_iter()
            .filter(|(k, _)| !SEEDED_SECTIONS.iter().any(|sec| k == &format!("{sec}.seed")))
            .collect();
        back.apply(&flat).unwrap();
        assert_eq!(back, s);
    }
}
