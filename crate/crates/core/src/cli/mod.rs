//! Batch front end: ingestion, extraction, rendering, training, evaluation
//! and the band/frame/sample-rate sweep. The `hpss-ser` binary is a thin
//! argument parser over these functions.

mod commands;
mod manifest;
mod render;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use commands::{
    cmd_eval, cmd_extract, cmd_sweep, cmd_train, embed_maps, extract_maps, sweep_csv,
    ExtractSummary, GridCell, SweepRow, TrainInput,
};
pub use manifest::{
    cmd_ingest, find_wavs, label_from_filename, DatasetManifest, IngestReport, Labeling,
    ManifestRow,
};
pub use render::{cmd_render, encode_png, intensity, raster, render_maps, Colormap};

use crate::audio::AudioError;
use crate::binio::FormatError;
use crate::classifier::{EmbeddingError, ModelError, TrainConfig, TrainError};
use crate::featuremap::{FeatureError, FeatureMapSpec};
use crate::hpss::HpssConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("no input files found")]
    NoFilesFound,
    #[error("unknown emotion label code {0:?}")]
    UnknownLabelCode(String),
    #[error("duplicate manifest path {0}")]
    DuplicatePath(PathBuf),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("rendering failed: {0}")]
    Render(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

impl From<crate::featuremap::MapFileError> for CliError {
    fn from(e: crate::featuremap::MapFileError) -> Self {
        match e {
            crate::featuremap::MapFileError::Format(f) => CliError::Format(f),
            crate::featuremap::MapFileError::Io(io) => CliError::Io(io),
        }
    }
}

/// Optional JSON configuration; command-line flags override its fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub features: FeatureMapSpec,
    pub hpss: HpssConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"train": {"epochs": 3}, "features": {"bands": 64}}"#).unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.batch_size, 128);
        assert_eq!(cfg.features.bands, 64);
        assert_eq!(cfg.features.window_size, 2048);
        assert_eq!(cfg.hpss, HpssConfig::default());
    }
}
