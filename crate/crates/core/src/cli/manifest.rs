use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::featuremap::EmotionLabel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub path: PathBuf,
    pub label: EmotionLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
}

/// Labelled audio files, unique by path.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    rows: Vec<ManifestRow>,
}

impl DatasetManifest {
    pub fn new(rows: Vec<ManifestRow>) -> Result<Self, CliError> {
        let mut seen = BTreeSet::new();
        for r in &rows {
            if !seen.insert(&r.path) {
                return Err(CliError::DuplicatePath(r.path.clone()));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ManifestRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn speaker_of(&self, path: &str) -> Option<&str> {
        self.rows
            .iter()
            .find(|r| r.path.to_string_lossy() == path)
            .and_then(|r| r.speaker.as_deref())
    }

    /// Parses `path,label[,speaker]` CSV with a header row. Relative paths are
    /// taken relative to `base`.
    pub fn from_csv_reader<R: std::io::Read>(reader: R, base: &Path) -> Result<Self, CliError> {
        let mut rdr = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let path = rec.get(0).unwrap_or_default();
            if path.is_empty() {
                continue;
            }
            let label_text = rec.get(1).unwrap_or_default();
            let label = label_text
                .parse::<EmotionLabel>()
                .map_err(|_| CliError::UnknownLabelCode(label_text.to_string()))?;
            let speaker = rec.get(2).filter(|s| !s.is_empty()).map(str::to_string);
            let path = PathBuf::from(path);
            let path = if path.is_relative() { base.join(path) } else { path };
            rows.push(ManifestRow {
                path,
                label,
                speaker,
            });
        }
        Self::new(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_csv_reader(file, base)
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["path", "label", "speaker"])?;
        for r in &self.rows {
            let path = r.path.to_string_lossy();
            w.write_record([path.as_ref(), r.label.name(), r.speaker.as_deref().unwrap_or("")])?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CliError> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

/// EMO-DB naming: the sixth character of the stem is the emotion code and
/// the first two are the speaker.
pub fn label_from_filename(stem: &str) -> Result<EmotionLabel, CliError> {
    let code = stem
        .chars()
        .nth(5)
        .ok_or_else(|| CliError::UnknownLabelCode(stem.to_string()))?;
    EmotionLabel::from_emodb_code(code).ok_or_else(|| CliError::UnknownLabelCode(code.to_string()))
}

fn speaker_from_filename(stem: &str) -> Option<String> {
    let s: String = stem.chars().take(2).collect();
    (s.len() == 2 && s.chars().all(|c| c.is_ascii_digit())).then_some(s)
}

/// Sorted `.wav` files under `dir`, recursively.
pub fn find_wavs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
            {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone)]
pub enum Labeling {
    /// Labels come from a `path,label[,speaker]` CSV.
    Manifest(PathBuf),
    /// Labels come from EMO-DB style file names.
    FilenameRule,
}

#[derive(Debug, Clone)]
pub struct IngestReport {
    pub manifest: DatasetManifest,
    /// Files left out, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

pub fn cmd_ingest(dir: &Path, labeling: &Labeling) -> Result<IngestReport, CliError> {
    let mut skipped = Vec::new();
    let rows = match labeling {
        Labeling::Manifest(csv_path) => {
            let listed = DatasetManifest::load(csv_path)?;
            let mut rows = Vec::new();
            for row in listed.rows {
                let path = if row.path.is_relative() { dir.join(&row.path) } else { row.path.clone() };
                if path.is_file() {
                    rows.push(ManifestRow { path, ..row });
                } else {
                    skipped.push((path, "file not found".to_string()));
                }
            }
            rows
        }
        Labeling::FilenameRule => {
            let mut rows = Vec::new();
            for path in find_wavs(dir)? {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                match label_from_filename(&stem) {
                    Ok(label) => rows.push(ManifestRow {
                        speaker: speaker_from_filename(&stem),
                        path,
                        label,
                    }),
                    Err(e) => skipped.push((path, e.to_string())),
                }
            }
            rows
        }
    };
    if rows.is_empty() {
        return Err(CliError::NoFilesFound);
    }
    Ok(IngestReport {
        manifest: DatasetManifest::new(rows)?,
        skipped,
    })
}
