//! On-disk layout of a fitted pipeline: one directory holding the embedding
//! file, the marker file, the network files and a JSON manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HyperConfig, PipelineModel, PipelineOptions, Rule};
use crate::embedding::EmbeddingModel;
use crate::marker::MarkerSet;
use crate::nn::Network;
use crate::util;
use crate::{Error, Result};

pub const EMBEDDING_FILE: &str = "embedding.txt";
pub const MARKER_FILE: &str = "markers.txt";
pub const CNN_FILE: &str = "cnn.json";
pub const MLP_FILE: &str = "mlp.json";
pub const MANIFEST_FILE: &str = "manifest.json";

const FORMAT: &str = "webfpr-pipeline";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    hyper: HyperConfig,
    options: PipelineOptions,
    threshold: f64,
    seed: u64,
    train_checksum: String,
}

pub(super) fn save(model: &PipelineModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    model.embedding.save(&dir.join(EMBEDDING_FILE))?;
    model.markers.save(&dir.join(MARKER_FILE))?;
    model.cnn.save(&dir.join(CNN_FILE))?;
    if let Some(mlp) = &model.mlp {
        mlp.save(&dir.join(MLP_FILE))?;
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        hyper: model.hyper.clone(),
        options: model.options.clone(),
        threshold: model.threshold,
        seed: model.seed,
        train_checksum: model.train_checksum.clone(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("serialize manifest");
    json.push('\n');
    util::write_file(&dir.join(MANIFEST_FILE), json.as_bytes())
}

pub(super) fn load(dir: &Path) -> Result<PipelineModel> {
    let path = dir.join(MANIFEST_FILE);
    let manifest: Manifest = serde_json::from_str(&util::read_to_string(&path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if manifest.format != FORMAT || manifest.version != VERSION {
        return Err(Error::Format(format!(
            "unsupported pipeline bundle {} v{}",
            manifest.format, manifest.version
        )));
    }
    let mlp = match manifest.hyper.rule {
        Rule::Histogram => Some(Network::load(&dir.join(MLP_FILE))?),
        Rule::Max => None,
    };
    Ok(PipelineModel {
        embedding: EmbeddingModel::load(&dir.join(EMBEDDING_FILE))?,
        markers: MarkerSet::load(&dir.join(MARKER_FILE))?,
        cnn: Network::load(&dir.join(CNN_FILE))?,
        mlp,
        threshold: manifest.threshold,
        hyper: manifest.hyper,
        options: manifest.options,
        seed: manifest.seed,
        train_checksum: manifest.train_checksum,
    })
}
