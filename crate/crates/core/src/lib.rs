//! Hybrid harmonic/percussive Mel feature maps for speech emotion recognition.
//!
//! The pipeline runs
//!
//! ```text
//! WAV -> mono f64 -> resample -> fixed-length subsamples
//!     -> Hanning STFT -> power -> Mel filterbank
//!     -> { log( (H + P) / 2 ) , log(Mel) }   (H/P from directional median masks)
//!     -> (bands x frames x 2) feature map
//!     -> 2048-d embedding -> MLP (1024, 1024, 512, 512, dropout) -> 7 emotions
//! ```
//!
//! Each stage is available on its own; see the crate `examples/` directory for
//! one runnable program per capability and the `hpss-ser` binary for batch use.
//!
//! ```
//! use hpss_ser::audio::AudioBuffer;
//! use hpss_ser::featuremap::{FeatureExtractor, FeatureMapSpec};
//! use hpss_ser::hpss::HpssConfig;
//!
//! let spec = FeatureMapSpec::new(32, 16, 8000, 256);
//! let tone: Vec<f64> = (0..spec.subsample_len())
//!     .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 8000.0).sin())
//!     .collect();
//! let buf = AudioBuffer::new(tone, 8000)?;
//! let map = FeatureExtractor::new(spec, HpssConfig::default())?.build(&buf, None, "tone")?;
//! assert_eq!((map.bands(), map.frames()), (32, 16));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod audio;
mod binio;
pub mod classifier;
pub mod cli;
pub mod featuremap;
pub mod hpss;
pub mod melbank;
pub mod spectral;
pub mod synth;

pub use binio::FormatError;
pub use featuremap::EmotionLabel;
