use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{CliError, DatasetManifest};
use crate::audio::{decode_wav, resample};
use crate::classifier::{
    evaluate, import_embeddings, pool_embed, train, EvalReport, Example, MlpModel, TrainConfig,
    TrainOutcome,
};
use crate::featuremap::{
    class_counts, load_maps, save_maps, EmotionLabel, FeatureExtractor, FeatureMap,
    FeatureMapSpec,
};
use crate::hpss::HpssConfig;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtractSummary {
    pub maps: usize,
    pub per_class: BTreeMap<EmotionLabel, usize>,
    /// Files that could not be processed, with the error text.
    pub failures: Vec<(PathBuf, String)>,
}

impl ExtractSummary {
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.failures.is_empty())
    }
}

/// Runs decode, resample, subsample and map construction for every manifest
/// row, in manifest order. Failing files are recorded and skipped.
pub fn extract_maps(
    manifest: &DatasetManifest,
    spec: &FeatureMapSpec,
    hpss: &HpssConfig,
) -> Result<(Vec<FeatureMap>, ExtractSummary), CliError> {
    if manifest.is_empty() {
        return Err(CliError::NoFilesFound);
    }
    let extractor = FeatureExtractor::new(*spec, *hpss)?;
    let mut maps = Vec::new();
    let mut summary = ExtractSummary::default();
    for row in manifest.rows() {
        let source = row.path.to_string_lossy();
        let result = (|| -> Result<Vec<FeatureMap>, CliError> {
            let bytes = std::fs::read(&row.path)?;
            let audio = resample(&decode_wav(&bytes)?, spec.sample_rate)?;
            Ok(extractor.build_all(&audio, Some(row.label), &source)?)
        })();
        match result {
            Ok(mut built) => {
                log::info!("{source}: {} maps", built.len());
                maps.append(&mut built);
            }
            Err(e) => {
                log::warn!("{source}: {e}");
                summary.failures.push((row.path.clone(), e.to_string()));
            }
        }
    }
    summary.maps = maps.len();
    summary.per_class = class_counts(maps.iter().filter_map(|m| m.label.as_ref()));
    Ok((maps, summary))
}

pub fn cmd_extract(
    manifest: &DatasetManifest,
    spec: &FeatureMapSpec,
    hpss: &HpssConfig,
    out: &Path,
) -> Result<ExtractSummary, CliError> {
    let (maps, summary) = extract_maps(manifest, spec, hpss)?;
    save_maps(&maps, out)?;
    Ok(summary)
}

/// Pool-embeds labelled maps. Groups come from the manifest speaker column,
/// matched on the `path` part of each `path#index` source id.
pub fn embed_maps(maps: &[FeatureMap], speakers: Option<&DatasetManifest>) -> Vec<Example> {
    maps.iter()
        .filter_map(|m| {
            let label = m.label?;
            let path = m.source_id.rsplit_once('#').map_or(m.source_id.as_str(), |(p, _)| p);
            Some(Example {
                embedding: pool_embed(m),
                label,
                group: speakers.and_then(|s| s.speaker_of(path)).map(str::to_string),
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum TrainInput {
    /// An `FMAP` file, embedded with the pooling embedder.
    Maps(PathBuf),
    /// An `EMB2` file of externally computed embeddings.
    Embeddings(PathBuf),
}

fn load_examples(input: &TrainInput, speakers: Option<&DatasetManifest>) -> Result<Vec<Example>, CliError> {
    Ok(match input {
        TrainInput::Maps(p) => embed_maps(&load_maps(p)?, speakers),
        TrainInput::Embeddings(p) => import_embeddings(p)?
            .into_iter()
            .map(|(embedding, label)| Example::new(embedding, label))
            .collect(),
    })
}

/// Trains and writes `model.mlpc`, `report.csv` and `report.json` into `out_dir`.
pub fn cmd_train(
    input: &TrainInput,
    cfg: &TrainConfig,
    speakers: Option<&DatasetManifest>,
    out_dir: &Path,
) -> Result<TrainOutcome, CliError> {
    let examples = load_examples(input, speakers)?;
    let outcome = train(&examples, cfg)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("model.mlpc"), outcome.model.to_bytes())?;
    std::fs::write(out_dir.join("report.csv"), outcome.report.confusion_csv())?;
    std::fs::write(out_dir.join("report.json"), outcome.report.to_json())?;
    Ok(outcome)
}

/// Evaluates a checkpoint on every example of the input.
pub fn cmd_eval(model_path: &Path, input: &TrainInput) -> Result<EvalReport, CliError> {
    let model = MlpModel::from_bytes(&std::fs::read(model_path)?)?;
    let examples = load_examples(input, None)?;
    Ok(evaluate(&model, &examples)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCell {
    pub bands: usize,
    pub frames: usize,
    pub sample_rate: u32,
}

impl std::str::FromStr for GridCell {
    type Err = CliError;

    /// `BANDSxFRAMES@RATE`, e.g. `128x128@88200`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CliError::Config(format!("grid cell {s:?} is not BANDSxFRAMES@RATE"));
        let (dims, rate) = s.trim().split_once('@').ok_or_else(bad)?;
        let (b, f) = dims.split_once('x').ok_or_else(bad)?;
        Ok(Self {
            bands: b.parse().map_err(|_| bad())?,
            frames: f.parse().map_err(|_| bad())?,
            sample_rate: rate.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: GridCell,
    pub accuracy: Result<f64, String>,
}

/// Extract and train once per grid cell with a shared seed. `base` supplies
/// window size and analysis hop; subsamples never overlap. Cell failures
/// become error rows.
pub fn cmd_sweep(
    manifest: &DatasetManifest,
    grid: &[GridCell],
    base: &FeatureMapSpec,
    hpss: &HpssConfig,
    cfg: &TrainConfig,
) -> Result<Vec<SweepRow>, CliError> {
    if grid.is_empty() {
        return Err(CliError::Config("sweep grid is empty".into()));
    }
    let rows = grid
        .iter()
        .map(|&cell| {
            let spec = FeatureMapSpec {
                bands: cell.bands,
                frames: cell.frames,
                sample_rate: cell.sample_rate,
                subsample_hop_frames: cell.frames,
                ..*base
            };
            let accuracy = (|| -> Result<f64, CliError> {
                let (maps, _) = extract_maps(manifest, &spec, hpss)?;
                let examples = embed_maps(&maps, Some(manifest));
                Ok(train(&examples, cfg)?.report.accuracy)
            })()
            .map_err(|e| e.to_string());
            if let Err(e) = &accuracy {
                log::warn!("sweep cell {cell:?} failed: {e}");
            }
            SweepRow { cell, accuracy }
        })
        .collect();
    Ok(rows)
}

/// `Band,Frame,Sample rate,Accuracy` table with percent accuracies.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("Band,Frame,Sample rate,Accuracy\n");
    for r in rows {
        let acc = match &r.accuracy {
            Ok(a) => format!("{:.2}%", 100.0 * a),
            Err(e) => format!("\"error: {}\"", e.replace('"', "'")),
        };
        writeln!(s, "{},{},{},{}", r.cell.bands, r.cell.frames, r.cell.sample_rate, acc).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cell_parsing() {
        let c: GridCell = "128x128@88200".parse().unwrap();
        assert_eq!(c, GridCell { bands: 128, frames: 128, sample_rate: 88200 });
        assert!("128@88200".parse::<GridCell>().is_err());
        assert!("axb@1".parse::<GridCell>().is_err());
    }

    #[test]
    fn sweep_table_layout() {
        let rows = vec![
            SweepRow {
                cell: GridCell { bands: 32, frames: 32, sample_rate: 88200 },
                accuracy: Ok(0.7192),
            },
            SweepRow {
                cell: GridCell { bands: 128, frames: 128, sample_rate: 88200 },
                accuracy: Err("boom".into()),
            },
        ];
        assert_eq!(
            sweep_csv(&rows),
            "Band,Frame,Sample rate,Accuracy\n32,32,88200,71.92%\n128,128,88200,\"error: boom\"\n"
        );
    }

    #[test]
    fn empty_manifest_is_no_files() {
        let m = DatasetManifest::default();
        assert!(matches!(
            extract_maps(&m, &FeatureMapSpec::default(), &HpssConfig::default()),
            Err(CliError::NoFilesFound)
        ));
    }
}
