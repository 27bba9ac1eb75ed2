//! Synthetic test signals and a four-class labelled corpus.
//!
//! Every generator is deterministic in its seed.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{encode_wav_pcm16, AudioBuffer};
use crate::cli::{CliError, DatasetManifest, ManifestRow};
use crate::featuremap::EmotionLabel;

pub fn sine(freq: f64, amplitude: f64, len: usize, sample_rate: u32) -> Vec<f64> {
    (0..len)
        .map(|i| amplitude * (2.0 * PI * freq * i as f64 / sample_rate as f64).sin())
        .collect()
}

/// Stacked harmonics of a slowly gliding fundamental.
pub fn harmonic_tone(rng: &mut impl Rng, len: usize, sample_rate: u32) -> Vec<f64> {
    let f0 = rng.random_range(160.0..300.0);
    let glide = rng.random_range(-0.08..0.08);
    let partials = rng.random_range(3..7);
    let amps: Vec<f64> = (1..=partials).map(|k| rng.random_range(0.5..1.0) / k as f64).collect();
    let dur = len as f64 / sample_rate as f64;
    let mut phase = vec![0.0; partials];
    (0..len)
        .map(|i| {
            let t = i as f64 / sample_rate as f64;
            let f = f0 * (1.0 + glide * t / dur);
            let mut v = 0.0;
            for (k, (ph, a)) in phase.iter_mut().zip(&amps).enumerate() {
                *ph += 2.0 * PI * f * (k + 1) as f64 / sample_rate as f64;
                v += a * ph.sin();
            }
            0.3 * v
        })
        .collect()
}

/// Short exponentially decaying broadband bursts at random onsets, `rate`
/// bursts per second on average.
pub fn click_train(rng: &mut impl Rng, rate: f64, len: usize, sample_rate: u32) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let count = ((len as f64 / sample_rate as f64) * rate).ceil() as usize;
    let tau = rng.random_range(0.001..0.004) * sample_rate as f64;
    for _ in 0..count {
        let onset = rng.random_range(0..len);
        let gain = rng.random_range(0.4..0.9);
        let span = (8.0 * tau) as usize;
        for j in 0..span.min(len - onset) {
            out[onset + j] += gain * (-(j as f64) / tau).exp() * rng.random_range(-1.0..1.0);
        }
    }
    out
}

pub fn white_noise(rng: &mut impl Rng, amplitude: f64, len: usize) -> Vec<f64> {
    (0..len).map(|_| amplitude * rng.random_range(-1.0..1.0)).collect()
}

/// Signal families of the synthetic corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Harmonic,
    Percussive,
    Mixed,
    Noise,
}

impl SignalKind {
    pub const ALL: [SignalKind; 4] = [Self::Harmonic, Self::Percussive, Self::Mixed, Self::Noise];

    /// Emotion label the corpus attaches to this family.
    pub fn label(self) -> EmotionLabel {
        match self {
            Self::Harmonic => EmotionLabel::Neutral,
            Self::Percussive => EmotionLabel::Anger,
            Self::Mixed => EmotionLabel::Happiness,
            Self::Noise => EmotionLabel::Sadness,
        }
    }

    pub fn generate(self, seed: u64, len: usize, sample_rate: u32) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let floor = white_noise(&mut rng, 1e-3, len);
        let body = match self {
            Self::Harmonic => harmonic_tone(&mut rng, len, sample_rate),
            Self::Percussive => {
                let rate = rng.random_range(5.0..12.0);
                click_train(&mut rng, rate, len, sample_rate)
            }
            Self::Mixed => {
                let h = harmonic_tone(&mut rng, len, sample_rate);
                let rate = rng.random_range(16.0..28.0);
                let p = click_train(&mut rng, rate, len, sample_rate);
                h.iter().zip(&p).map(|(a, b)| 0.5 * a + b).collect()
            }
            Self::Noise => {
                let amp = rng.random_range(0.1..0.4);
                white_noise(&mut rng, amp, len)
            }
        };
        body.iter().zip(&floor).map(|(a, b)| (a + b).clamp(-1.0, 1.0)).collect()
    }
}

/// Writes `per_class` clips of each family as 16-bit WAV files under `dir`
/// and returns the manifest. Clip `i` of a family gets speaker `spk{i % 5}`.
pub fn write_corpus(
    dir: &Path,
    per_class: usize,
    secs: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<DatasetManifest, CliError> {
    std::fs::create_dir_all(dir)?;
    let len = (secs * sample_rate as f64).round() as usize;
    let mut rows = Vec::new();
    for (k, kind) in SignalKind::ALL.into_iter().enumerate() {
        for i in 0..per_class {
            let clip_seed = seed ^ ((k as u64) << 32 | i as u64);
            let samples = kind.generate(clip_seed, len, sample_rate);
            let path: PathBuf = dir.join(format!("{:?}_{i:03}.wav", kind).to_lowercase());
            let bytes = encode_wav_pcm16(&AudioBuffer::new(samples, sample_rate)?)?;
            std::fs::write(&path, bytes)?;
            rows.push(ManifestRow {
                path,
                label: kind.label(),
                speaker: Some(format!("spk{}", i % 5)),
            });
        }
    }
    DatasetManifest::new(rows)
}
