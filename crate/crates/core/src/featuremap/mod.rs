//! Two-channel hybrid feature maps.
//!
//! Each map pairs the log of the averaged harmonic/percussive Mel grid
//! (channel 0) with the plain log-Mel grid (channel 1) over one fixed-length
//! subsample. Both channels are min-max normalized per map.

mod format;
mod label;

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{decode_maps, encode_maps, load_maps, save_maps, MapFileError, FMAP_VERSION};
pub use label::{EmotionLabel, UnknownLabel};

use crate::audio::AudioBuffer;
use crate::hpss::{averaged_hp, decompose, HpssConfig, HpssError};
use crate::melbank::{log_mel, mel_spectrogram, MelError, MelFilterbank, DEFAULT_LOG_FLOOR};
use crate::spectral::{power, stft, SpectralError, WindowFunction};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid feature map spec: {0}")]
    InvalidSpec(String),
    #[error("buffer sample rate {found} differs from spec {expected}")]
    SampleRateMismatch { found: u32, expected: u32 },
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("class {0} has no examples")]
    MissingClass(EmotionLabel),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Mel(#[from] MelError),
    #[error(transparent)]
    Hpss(#[from] HpssError),
}

/// Geometry of a feature map and of the subsamples that feed it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureMapSpec {
    pub bands: usize,
    pub frames: usize,
    pub sample_rate: u32,
    /// Analysis window and FFT length in samples.
    pub window_size: usize,
    /// STFT hop in samples.
    pub analysis_hop: usize,
    /// Advance between consecutive subsamples, in STFT frames.
    pub subsample_hop_frames: usize,
}

impl Default for FeatureMapSpec {
    fn default() -> Self {
        Self::new(128, 128, 88200, 2048)
    }
}

impl FeatureMapSpec {
    /// Non-overlapping frames (`analysis_hop == window_size`) and
    /// non-overlapping subsamples.
    pub fn new(bands: usize, frames: usize, sample_rate: u32, window_size: usize) -> Self {
        Self {
            bands,
            frames,
            sample_rate,
            window_size,
            analysis_hop: window_size,
            subsample_hop_frames: frames,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: &str| Err(FeatureError::InvalidSpec(m.to_string()));
        if self.bands == 0 || self.frames == 0 {
            return bad("bands and frames must be positive");
        }
        if self.window_size < 2 {
            return bad("window_size must be at least 2");
        }
        if self.analysis_hop == 0 || self.subsample_hop_frames == 0 {
            return bad("hops must be positive");
        }
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive");
        }
        if self.bands > u16::MAX as usize || self.frames > u16::MAX as usize {
            return bad("bands and frames must fit in 16 bits");
        }
        Ok(())
    }

    /// Samples covered by one subsample: `frames * analysis_hop`.
    pub fn subsample_len(&self) -> usize {
        self.frames * self.analysis_hop
    }

    pub fn subsample_step(&self) -> usize {
        self.subsample_hop_frames * self.analysis_hop
    }

    pub fn subsample_secs(&self) -> f64 {
        self.subsample_len() as f64 / self.sample_rate as f64
    }

    /// Number of subsamples produced from `len` samples (always at least one).
    pub fn subsample_count(&self, len: usize) -> usize {
        let extra = len.saturating_sub(self.subsample_len());
        1 + extra.div_ceil(self.subsample_step())
    }
}

/// Slices a buffer into fixed-length, zero-padded subsamples.
pub fn subsample(buf: &AudioBuffer, spec: &FeatureMapSpec) -> Result<Vec<AudioBuffer>, FeatureError> {
    spec.validate()?;
    if buf.sample_rate() != spec.sample_rate {
        return Err(FeatureError::SampleRateMismatch {
            found: buf.sample_rate(),
            expected: spec.sample_rate,
        });
    }
    let len = spec.subsample_len();
    let step = spec.subsample_step();
    let samples = buf.samples();
    (0..spec.subsample_count(samples.len()))
        .map(|i| {
            let start = (i * step).min(samples.len());
            let end = (start + len).min(samples.len());
            let mut chunk = samples[start..end].to_vec();
            chunk.resize(len, 0.0);
            AudioBuffer::new(chunk, spec.sample_rate).map_err(|e| FeatureError::InvalidSpec(e.to_string()))
        })
        .collect()
}

/// A `(bands, frames, 2)` feature tensor with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    /// `[averaged harmonic/percussive, log-Mel]`, each `(bands, frames)`.
    pub channels: [Array2<f32>; 2],
    pub label: Option<EmotionLabel>,
    pub source_id: String,
}

impl FeatureMap {
    pub const CHANNEL_NAMES: [&'static str; 2] = ["avg_hp", "log_mel"];

    pub fn new(
        channels: [Array2<f32>; 2],
        label: Option<EmotionLabel>,
        source_id: impl Into<String>,
    ) -> Result<Self, FeatureError> {
        if channels[0].dim() != channels[1].dim() {
            return Err(FeatureError::GeometryMismatch(format!(
                "channel shapes {:?} and {:?}",
                channels[0].dim(),
                channels[1].dim()
            )));
        }
        Ok(Self {
            channels,
            label,
            source_id: source_id.into(),
        })
    }

    pub fn bands(&self) -> usize {
        self.channels[0].nrows()
    }

    pub fn frames(&self) -> usize {
        self.channels[0].ncols()
    }
}

/// Rescales to `[0, 1]`; a constant grid becomes all zeros.
pub fn min_max_normalize(grid: &Array2<f64>) -> Array2<f64> {
    let (lo, hi) = grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 0.0) || !range.is_finite() {
        return Array2::zeros(grid.raw_dim());
    }
    grid.mapv(|v| ((v - lo) / range).clamp(0.0, 1.0))
}

/// The un-normalized stages for one subsample.
#[derive(Debug, Clone)]
pub struct FeatureStages {
    pub mel: Array2<f64>,
    /// Averaged harmonic/percussive energy.
    pub avg_hp: Array2<f64>,
    pub log_avg_hp: Array2<f64>,
    pub log_mel: Array2<f64>,
}

/// Reusable pipeline state: analysis window and filterbank for one spec.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    spec: FeatureMapSpec,
    hpss: HpssConfig,
    window: WindowFunction,
    filterbank: MelFilterbank,
}

impl FeatureExtractor {
    pub fn new(spec: FeatureMapSpec, hpss: HpssConfig) -> Result<Self, FeatureError> {
        spec.validate()?;
        hpss.validate()?;
        let window = WindowFunction::hanning(spec.window_size)?;
        let filterbank = MelFilterbank::full_band(spec.sample_rate, spec.window_size, spec.bands)?;
        Ok(Self {
            spec,
            hpss,
            window,
            filterbank,
        })
    }

    pub fn spec(&self) -> &FeatureMapSpec {
        &self.spec
    }

    pub fn hpss_config(&self) -> &HpssConfig {
        &self.hpss
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn stages(&self, sub: &AudioBuffer) -> Result<FeatureStages, FeatureError> {
        if sub.sample_rate() != self.spec.sample_rate {
            return Err(FeatureError::SampleRateMismatch {
                found: sub.sample_rate(),
                expected: self.spec.sample_rate,
            });
        }
        if sub.len() != self.spec.subsample_len() {
            return Err(FeatureError::GeometryMismatch(format!(
                "subsample has {} samples, expected {}",
                sub.len(),
                self.spec.subsample_len()
            )));
        }
        let spec = stft(sub, self.spec.analysis_hop, &self.window)?;
        if spec.num_frames() != self.spec.frames {
            return Err(FeatureError::GeometryMismatch(format!(
                "STFT produced {} frames, expected {}",
                spec.num_frames(),
                self.spec.frames
            )));
        }
        let mel = mel_spectrogram(&power(&spec), &self.filterbank)?;
        let avg = averaged_hp(&decompose(&mel, &self.hpss)?)?;
        let log_avg_hp = log_mel(&avg, DEFAULT_LOG_FLOOR)?.values;
        let log_mel_values = log_mel(&mel, DEFAULT_LOG_FLOOR)?.values;
        Ok(FeatureStages {
            mel: mel.values,
            avg_hp: avg.values,
            log_avg_hp,
            log_mel: log_mel_values,
        })
    }

    pub fn build(
        &self,
        sub: &AudioBuffer,
        label: Option<EmotionLabel>,
        source_id: impl Into<String>,
    ) -> Result<FeatureMap, FeatureError> {
        let stages = self.stages(sub)?;
        let to_f32 = |g: &Array2<f64>| min_max_normalize(g).mapv(|v| v as f32);
        FeatureMap::new(
            [to_f32(&stages.log_avg_hp), to_f32(&stages.log_mel)],
            label,
            source_id,
        )
    }

    /// Subsamples a whole buffer and builds one map per subsample. Source ids
    /// are `"{source}#{index}"`.
    pub fn build_all(
        &self,
        buf: &AudioBuffer,
        label: Option<EmotionLabel>,
        source: &str,
    ) -> Result<Vec<FeatureMap>, FeatureError> {
        subsample(buf, &self.spec)?
            .iter()
            .enumerate()
            .map(|(i, sub)| self.build(sub, label, format!("{source}#{i}")))
            .collect()
    }
}

/// One-shot convenience around [`FeatureExtractor::build`].
pub fn build_feature_map(
    sub: &AudioBuffer,
    spec: &FeatureMapSpec,
    hpss: &HpssConfig,
) -> Result<FeatureMap, FeatureError> {
    FeatureExtractor::new(*spec, *hpss)?.build(sub, None, "")
}

/// Duplicates minority-class items until every class in `classes` matches the
/// majority count.
///
/// Originals are kept in order; duplicates are appended class by class (in
/// ordinal order), each drawn uniformly with replacement from that class.
pub fn oversample<T: Clone>(
    dataset: &[(T, EmotionLabel)],
    classes: &[EmotionLabel],
    seed: u64,
) -> Result<Vec<(T, EmotionLabel)>, FeatureError> {
    if dataset.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    let mut by_class: BTreeMap<EmotionLabel, Vec<usize>> =
        classes.iter().map(|&c| (c, Vec::new())).collect();
    for (i, (_, label)) in dataset.iter().enumerate() {
        by_class.entry(*label).or_default().push(i);
    }
    if let Some((&c, _)) = by_class.iter().find(|(_, v)| v.is_empty()) {
        return Err(FeatureError::MissingClass(c));
    }
    let target = by_class.values().map(Vec::len).max().unwrap_or(0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = dataset.to_vec();
    for members in by_class.values() {
        for _ in members.len()..target {
            let &pick = members.choose(&mut rng).expect("class is non-empty");
            out.push(dataset[pick].clone());
        }
    }
    Ok(out)
}

/// Count of items per class.
pub fn class_counts<'a, I>(labels: I) -> BTreeMap<EmotionLabel, usize>
where
    I: IntoIterator<Item = &'a EmotionLabel>,
{
    let mut counts = BTreeMap::new();
    for l in labels {
        *counts.entry(*l).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use EmotionLabel::*;

    #[test]
    fn default_subsample_length() {
        let spec = FeatureMapSpec::default();
        assert_eq!(spec.subsample_len(), 262_144);
        assert!((spec.subsample_secs() - 2.972).abs() < 1e-3);
    }

    #[test]
    fn subsample_counts() {
        let spec = FeatureMapSpec::default();
        let short = AudioBuffer::new(vec![0.3; 1000], 88200).unwrap();
        let subs = subsample(&short, &spec).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].len(), 262_144);
        assert_eq!(&subs[0].samples()[..1000], short.samples());
        assert!(subs[0].samples()[1000..].iter().all(|&s| s == 0.0));

        // ceil(882000 / 262144) = 4
        assert_eq!(spec.subsample_count(882_000), 4);
        assert_eq!(spec.subsample_count(0), 1);
        assert_eq!(spec.subsample_count(262_144), 1);
        assert_eq!(spec.subsample_count(262_145), 2);
    }

    #[test]
    fn overlapping_subsamples() {
        let spec = FeatureMapSpec {
            subsample_hop_frames: 2,
            ..FeatureMapSpec::new(4, 4, 100, 10)
        };
        // len 40, step 20: starts 0, 20, 40 cover 100 samples
        assert_eq!(spec.subsample_count(100), 4);
        let buf = AudioBuffer::new((0..100).map(|i| i as f64 / 100.0).collect(), 100).unwrap();
        let subs = subsample(&buf, &spec).unwrap();
        assert_eq!(subs.len(), 4);
        assert_eq!(subs[1].samples()[0], 0.2);
    }

    #[test]
    fn subsample_rate_mismatch() {
        let buf = AudioBuffer::new(vec![0.0; 10], 22050).unwrap();
        assert!(matches!(
            subsample(&buf, &FeatureMapSpec::default()),
            Err(FeatureError::SampleRateMismatch { .. })
        ));
    }

    #[test]
    fn normalization_rules() {
        let g = ndarray::arr2(&[[1.0, 3.0], [2.0, 5.0]]);
        let n = min_max_normalize(&g);
        assert_eq!(n, ndarray::arr2(&[[0.0, 0.5], [0.25, 1.0]]));
        assert_eq!(min_max_normalize(&Array2::from_elem((2, 2), 7.0)), Array2::<f64>::zeros((2, 2)));
    }

    #[test]
    fn silence_maps_to_zero_channels() {
        let spec = FeatureMapSpec::new(16, 8, 8000, 256);
        let sub = AudioBuffer::new(vec![0.0; spec.subsample_len()], 8000).unwrap();
        let map = build_feature_map(&sub, &spec, &HpssConfig::default()).unwrap();
        assert_eq!(map.channels[0].dim(), (16, 8));
        assert!(map.channels.iter().all(|c| c.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn wrong_length_subsample() {
        let spec = FeatureMapSpec::new(16, 8, 8000, 256);
        let sub = AudioBuffer::new(vec![0.0; 100], 8000).unwrap();
        assert!(matches!(
            build_feature_map(&sub, &spec, &HpssConfig::default()),
            Err(FeatureError::GeometryMismatch(_))
        ));
    }

    #[test]
    fn oversample_balances() {
        let data = vec![(1, Anger), (2, Anger), (3, Boredom), (4, Anger)];
        let out = oversample(&data, &[Anger, Boredom], 7).unwrap();
        assert_eq!(&out[..4], &data[..]);
        let counts = class_counts(out.iter().map(|(_, l)| l));
        assert_eq!(counts[&Anger], 3);
        assert_eq!(counts[&Boredom], 3);
        assert!(out[4..].iter().all(|&(v, l)| v == 3 && l == Boredom));
        assert_eq!(out, oversample(&data, &[Anger, Boredom], 7).unwrap());
    }

    #[test]
    fn oversample_noop_and_errors() {
        let data = vec![(1, Fear), (2, Sadness)];
        assert_eq!(oversample(&data, &[Fear, Sadness], 1).unwrap(), data);
        assert!(matches!(
            oversample(&data, &[Fear, Sadness, Neutral], 1),
            Err(FeatureError::MissingClass(Neutral))
        ));
        let empty: Vec<(u8, EmotionLabel)> = vec![];
        assert!(matches!(oversample(&empty, &[], 1), Err(FeatureError::EmptyDataset)));
    }
}
