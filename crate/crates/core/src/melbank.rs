//! Triangular Mel filterbanks, Mel and log-Mel spectrograms, and MFCCs.

use std::f64::consts::PI;

use ndarray::Array2;
use thiserror::Error;

use crate::spectral::PowerSpectrogram;

/// Floor applied before the logarithm so silent cells stay finite.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-10;

/// Cepstral coefficients kept for the MFCC comparison features.
pub const DEFAULT_MFCC_COEFFS: usize = 13;

#[derive(Debug, Error, PartialEq)]
pub enum MelError {
    #[error("invalid frequency range {f_min}..{f_max} Hz for sample rate {sample_rate}")]
    InvalidRange {
        f_min: f64,
        f_max: f64,
        sample_rate: u32,
    },
    #[error("filterbank needs at least one band")]
    NoBands,
    #[error("band {0} has no FFT bins in its support")]
    EmptyBand(usize),
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("spectrogram is already log scaled")]
    AlreadyLogScaled,
    #[error("spectrogram is not log scaled")]
    NotLogScaled,
    #[error("log floor must be positive")]
    NonPositiveFloor,
    #[error("{requested} coefficients requested from {bands} bands")]
    TooManyCoefficients { requested: usize, bands: usize },
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Bank of peak-1 triangles whose centers are equally spaced in Mel.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    /// `(bands, bins)`
    pub weights: Array2<f64>,
    /// Band edge frequencies in Hz; band `b` rises from `edges[b]`, peaks at
    /// `edges[b + 1]` and falls to `edges[b + 2]`.
    pub edges: Vec<f64>,
    pub fft_size: usize,
    pub sample_rate: u32,
}

impl MelFilterbank {
    pub fn new(
        sample_rate: u32,
        fft_size: usize,
        num_bands: usize,
        f_min: f64,
        f_max: f64,
    ) -> Result<Self, MelError> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(0.0..f_max).contains(&f_min) || f_max > nyquist {
            return Err(MelError::InvalidRange {
                f_min,
                f_max,
                sample_rate,
            });
        }
        if num_bands == 0 {
            return Err(MelError::NoBands);
        }
        let mel_lo = hz_to_mel(f_min);
        let mel_hi = hz_to_mel(f_max);
        let step = (mel_hi - mel_lo) / (num_bands + 1) as f64;
        let edges: Vec<f64> = (0..num_bands + 2)
            .map(|i| mel_to_hz(mel_lo + step * i as f64))
            .collect();

        let num_bins = fft_size / 2 + 1;
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let mut weights = Array2::<f64>::zeros((num_bands, num_bins));
        for b in 0..num_bands {
            let (lo, center, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            for k in 0..num_bins {
                let f = k as f64 * bin_hz;
                let w = if f > lo && f <= center {
                    (f - lo) / (center - lo)
                } else if f > center && f < hi {
                    (hi - f) / (hi - center)
                } else {
                    0.0
                };
                weights[[b, k]] = w;
            }
            if weights.row(b).iter().all(|&w| w == 0.0) {
                return Err(MelError::EmptyBand(b));
            }
        }
        Ok(Self {
            weights,
            edges,
            fft_size,
            sample_rate,
        })
    }

    /// Full-band bank from 0 Hz to Nyquist.
    pub fn full_band(sample_rate: u32, fft_size: usize, num_bands: usize) -> Result<Self, MelError> {
        Self::new(sample_rate, fft_size, num_bands, 0.0, sample_rate as f64 / 2.0)
    }

    pub fn num_bands(&self) -> usize {
        self.weights.nrows()
    }

    pub fn num_bins(&self) -> usize {
        self.weights.ncols()
    }

    /// Peak frequency of each band.
    pub fn centers(&self) -> &[f64] {
        &self.edges[1..self.edges.len() - 1]
    }
}

/// Energy (or log energy) grid laid out as `(bands, frames)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub values: Array2<f64>,
    pub sample_rate: u32,
    pub log_scaled: bool,
}

impl MelSpectrogram {
    pub fn from_energies(values: Array2<f64>, sample_rate: u32) -> Self {
        Self {
            values,
            sample_rate,
            log_scaled: false,
        }
    }

    pub fn band_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn frame_count(&self) -> usize {
        self.values.ncols()
    }
}

/// Projects a power spectrogram through the filterbank.
pub fn mel_spectrogram(
    pow: &PowerSpectrogram,
    fb: &MelFilterbank,
) -> Result<MelSpectrogram, MelError> {
    if pow.num_bins() != fb.num_bins() {
        return Err(MelError::GeometryMismatch(format!(
            "power spectrogram has {} bins, filterbank {}",
            pow.num_bins(),
            fb.num_bins()
        )));
    }
    if pow.sample_rate != fb.sample_rate {
        return Err(MelError::GeometryMismatch(format!(
            "sample rate {} vs filterbank {}",
            pow.sample_rate, fb.sample_rate
        )));
    }
    // (bands x bins) . (bins x frames)
    let values = fb.weights.dot(&pow.values.t());
    Ok(MelSpectrogram::from_energies(values, pow.sample_rate))
}

/// Natural log with a lower clamp: `ln(max(x, floor))`.
pub fn log_mel(mel: &MelSpectrogram, floor: f64) -> Result<MelSpectrogram, MelError> {
    if mel.log_scaled {
        return Err(MelError::AlreadyLogScaled);
    }
    if !(floor > 0.0) {
        return Err(MelError::NonPositiveFloor);
    }
    Ok(MelSpectrogram {
        values: mel.values.mapv(|v| v.max(floor).ln()),
        sample_rate: mel.sample_rate,
        log_scaled: true,
    })
}

/// Orthonormal type-II DCT matrix of shape `(coeffs, bands)`.
pub fn dct_matrix(num_coeffs: usize, num_bands: usize) -> Array2<f64> {
    let m = num_bands as f64;
    Array2::from_shape_fn((num_coeffs, num_bands), |(i, b)| {
        let scale = if i == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
        scale * (PI * i as f64 * (b as f64 + 0.5) / m).cos()
    })
}

/// Cepstral coefficients per frame, shape `(coeffs, frames)`.
pub fn mfcc(log_mel: &MelSpectrogram, num_coeffs: usize) -> Result<Array2<f64>, MelError> {
    if !log_mel.log_scaled {
        return Err(MelError::NotLogScaled);
    }
    let bands = log_mel.band_count();
    if num_coeffs > bands {
        return Err(MelError::TooManyCoefficients {
            requested: num_coeffs,
            bands,
        });
    }
    Ok(dct_matrix(num_coeffs, bands).dot(&log_mel.values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_scale_points() {
        assert_eq!(hz_to_mel(0.0), 0.0);
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
        assert!((hz_to_mel(700.0) - 781.172_838_748).abs() < 1e-6);
        assert!((mel_to_hz(hz_to_mel(1234.5)) - 1234.5).abs() < 1e-9);
    }

    #[test]
    fn default_bank_shape() {
        let fb = MelFilterbank::full_band(88200, 2048, 128).unwrap();
        assert_eq!(fb.weights.dim(), (128, 1025));
        for row in fb.weights.rows() {
            assert!(row.sum() > 0.0);
            assert!(row.iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn too_many_bands_is_empty_band() {
        assert!(matches!(
            MelFilterbank::full_band(16000, 64, 128),
            Err(MelError::EmptyBand(_))
        ));
    }

    #[test]
    fn invalid_range() {
        assert!(matches!(
            MelFilterbank::new(16000, 512, 10, 0.0, 9000.0),
            Err(MelError::InvalidRange { .. })
        ));
        assert!(matches!(
            MelFilterbank::new(16000, 512, 10, 500.0, 500.0),
            Err(MelError::InvalidRange { .. })
        ));
    }

    #[test]
    fn rows_are_unimodal() {
        let fb = MelFilterbank::full_band(22050, 1024, 40).unwrap();
        for row in fb.weights.rows() {
            let nz: Vec<usize> = (0..row.len()).filter(|&k| row[k] > 0.0).collect();
            let (first, last) = (nz[0], *nz.last().unwrap());
            assert_eq!(last - first + 1, nz.len(), "support is contiguous");
            let peak = (first..=last)
                .max_by(|&a, &b| row[a].total_cmp(&row[b]))
                .unwrap();
            for k in first..peak {
                assert!(row[k] <= row[k + 1]);
            }
            for k in peak..last {
                assert!(row[k] >= row[k + 1]);
            }
        }
    }

    #[test]
    fn log_mel_rules() {
        let mel = MelSpectrogram::from_energies(
            ndarray::arr2(&[[std::f64::consts::E, 0.0]]),
            8000,
        );
        let lm = log_mel(&mel, DEFAULT_LOG_FLOOR).unwrap();
        assert!((lm.values[[0, 0]] - 1.0).abs() < 1e-15);
        assert!((lm.values[[0, 1]] - (-23.025_850_929_940_457)).abs() < 1e-9);
        assert_eq!(log_mel(&lm, 1e-10), Err(MelError::AlreadyLogScaled));
        assert_eq!(log_mel(&mel, 0.0), Err(MelError::NonPositiveFloor));
    }

    #[test]
    fn mfcc_of_constant_column() {
        let v = -3.25;
        let lm = MelSpectrogram {
            values: Array2::from_elem((40, 3), v),
            sample_rate: 8000,
            log_scaled: true,
        };
        let c = mfcc(&lm, DEFAULT_MFCC_COEFFS).unwrap();
        for n in 0..3 {
            assert!((c[[0, n]] - v * 40f64.sqrt()).abs() < 1e-9);
            for i in 1..DEFAULT_MFCC_COEFFS {
                assert!(c[[i, n]].abs() < 1e-9);
            }
        }
        assert!(matches!(
            mfcc(&lm, 41),
            Err(MelError::TooManyCoefficients { .. })
        ));
        let linear = MelSpectrogram::from_energies(Array2::zeros((4, 1)), 8000);
        assert_eq!(mfcc(&linear, 2), Err(MelError::NotLogScaled));
    }
}
