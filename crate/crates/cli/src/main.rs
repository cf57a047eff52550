//! `webfpr` command-line interface.
//!
//! Exit status: 0 on success, 1 on invalid arguments, settings or data, 2 on
//! filesystem errors.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use settings::{parse_config, Settings};
use webfpr::{Error, Result};

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set embedding.dim=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Directory receiving the command's artifacts.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus and its train/test split.
    GenCorpus {
        #[arg(long)]
        seed: u64,
    },
    /// Train word embeddings on a corpus.
    TrainEmbeddings {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
    },
    /// Recruit marker words from the seed words.
    Markers {
        #[arg(long)]
        embedding: PathBuf,
    },
    /// Cut a corpus into marker-centered segments.
    Segment {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        markers: PathBuf,
    },
    /// Fit the full pipeline and write a model bundle.
    Train {
        #[arg(long)]
        train: Option<PathBuf>,
        /// Reuse this embedding file instead of training one.
        #[arg(long)]
        embedding: Option<PathBuf>,
        /// Reuse this marker file; requires `--embedding`.
        #[arg(long, requires = "embedding")]
        markers: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
    },
    /// Score a corpus with a model bundle.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Compute metrics from a predictions file.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Train and score the term-document baseline.
    BaselineTdm {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
    },
    /// Run the hyperparameter grid.
    Grid {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        /// Runs per configuration; overrides `grid.runs`.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: u64,
    },
    /// Summaries and plots of a grid results file.
    Report {
        #[arg(long)]
        results: PathBuf,
    },
    /// Print every setting with its effective value.
    Settings,
}

#[derive(Parser)]
#[command(name = "webfpr", version, about = "Website classification with word embeddings and false positive reduction")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

fn load_settings(common: &Common) -> Result<Settings> {
    let mut settings = Settings::default();
    let mut pairs = Vec::new();
    if let Some(path) = &common.config {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        pairs.extend(parse_config(&src, path)?);
    }
    for o in &common.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("--set expects KEY=VALUE, got '{o}'")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    settings.apply(&pairs)?;
    Ok(settings)
}

fn run(cli: Cli) -> Result<()> {
    let mut settings = load_settings(&cli.common)?;
    let out = cli.common.out_dir;
    match cli.command {
        Command::GenCorpus { seed } => {
            settings.validate()?;
            commands::gen_corpus(&settings, seed, &out)
        }
        Command::TrainEmbeddings { train, seed } => {
            override_path(&mut settings.corpus.train, train);
            settings.validate()?;
            commands::train_embeddings(&settings, seed, &out)
        }
        Command::Markers { embedding } => {
            settings.validate()?;
            commands::markers(&settings, &embedding, &out)
        }
        Command::Segment { corpus, markers } => {
            settings.validate()?;
            commands::segment(&settings, &corpus, &markers, &out)
        }
        Command::Train {
            train,
            embedding,
            markers,
            seed,
        } => {
            override_path(&mut settings.corpus.train, train);
            settings.validate()?;
            commands::train(&settings, embedding.as_deref(), markers.as_deref(), seed, &out)
        }
        Command::Predict { model, corpus } => {
            settings.validate()?;
            commands::predict(&settings, &model, &corpus, &out)
        }
        Command::Evaluate { predictions } => commands::evaluate(&predictions, &out),
        Command::BaselineTdm { train, test, seed } => {
            override_path(&mut settings.corpus.train, train);
            override_path(&mut settings.corpus.test, test);
            settings.validate()?;
            commands::baseline_tdm(&settings, seed, &out)
        }
        Command::Grid {
            train,
            test,
            runs,
            seed,
        } => {
            override_path(&mut settings.corpus.train, train);
            override_path(&mut settings.corpus.test, test);
            if let Some(r) = runs {
                settings.grid.runs = r;
            }
            settings.validate()?;
            commands::grid(&settings, seed, &out)
        }
        Command::Report { results } => commands::report(&results, &out),
        Command::Settings => {
            settings.validate()?;
            for (k, v) in settings.to_flat() {
                println!("{k} = {v}");
            }
            Ok(())
        }
    }
}

fn override_path(slot: &mut Option<PathBuf>, flag: Option<PathBuf>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
