//! Analysis windows, short-time Fourier transform, and power spectra.

use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::audio::AudioBuffer;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpectralError {
    #[error("window length {0} is below 2")]
    DegenerateWindow(usize),
    #[error("signal is empty")]
    EmptySignal,
    #[error("hop must be at least 1")]
    ZeroHop,
    #[error("window length {window} does not match FFT size {fft_size}")]
    WindowMismatch { window: usize, fft_size: usize },
}

/// Real analysis window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFunction {
    coefficients: Vec<f64>,
}

impl WindowFunction {
    /// Symmetric Hanning window, `sin^2(pi n / (M - 1))`.
    pub fn hanning(len: usize) -> Result<Self, SpectralError> {
        if len < 2 {
            return Err(SpectralError::DegenerateWindow(len));
        }
        let denom = (len - 1) as f64;
        let coefficients = (0..len)
            .map(|n| (PI * n as f64 / denom).sin().powi(2))
            .collect();
        Ok(Self { coefficients })
    }

    /// All-ones window.
    pub fn rectangular(len: usize) -> Result<Self, SpectralError> {
        if len < 1 {
            return Err(SpectralError::DegenerateWindow(len));
        }
        Ok(Self {
            coefficients: vec![1.0; len],
        })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// One-sided complex STFT, laid out as `(frames, bins)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub bins: Array2<Complex64>,
    pub fft_size: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl ComplexSpectrogram {
    pub fn num_frames(&self) -> usize {
        self.bins.nrows()
    }

    pub fn num_bins(&self) -> usize {
        self.bins.ncols()
    }
}

/// Squared-magnitude spectrogram with the geometry of its source STFT.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrogram {
    pub values: Array2<f64>,
    pub fft_size: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl PowerSpectrogram {
    pub fn num_frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_bins(&self) -> usize {
        self.values.ncols()
    }
}

/// Number of frames produced for a signal of `len` samples at the given hop.
///
/// Frames start at every multiple of `hop` below `len`; trailing frames are
/// zero-padded.
pub fn frame_count(len: usize, hop: usize) -> usize {
    if len == 0 {
        0
    } else {
        (len - 1) / hop + 1
    }
}

/// Short-time Fourier transform with FFT size equal to the window length.
pub fn stft(
    buf: &AudioBuffer,
    hop: usize,
    window: &WindowFunction,
) -> Result<ComplexSpectrogram, SpectralError> {
    if hop == 0 {
        return Err(SpectralError::ZeroHop);
    }
    if buf.is_empty() {
        return Err(SpectralError::EmptySignal);
    }
    let n_fft = window.len();
    let signal = buf.samples();
    let frames = frame_count(signal.len(), hop);
    let num_bins = n_fft / 2 + 1;

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut frame = vec![Complex64::default(); n_fft];
    let mut bins = Array2::<Complex64>::zeros((frames, num_bins));

    for (n, mut row) in bins.rows_mut().into_iter().enumerate() {
        let start = n * hop;
        for (r, slot) in frame.iter_mut().enumerate() {
            let s = signal.get(start + r).copied().unwrap_or(0.0);
            *slot = Complex64::new(s * window.coefficients[r], 0.0);
        }
        fft.process_with_scratch(&mut frame, &mut scratch);
        for (dst, src) in row.iter_mut().zip(&frame[..num_bins]) {
            *dst = *src;
        }
    }

    Ok(ComplexSpectrogram {
        bins,
        fft_size: n_fft,
        hop,
        sample_rate: buf.sample_rate(),
    })
}

/// Checks that an explicit FFT size agrees with the window before running [`stft`].
pub fn stft_with_size(
    buf: &AudioBuffer,
    fft_size: usize,
    hop: usize,
    window: &WindowFunction,
) -> Result<ComplexSpectrogram, SpectralError> {
    if window.len() != fft_size {
        return Err(SpectralError::WindowMismatch {
            window: window.len(),
            fft_size,
        });
    }
    stft(buf, hop, window)
}

pub fn power(spec: &ComplexSpectrogram) -> PowerSpectrogram {
    PowerSpectrogram {
        values: spec.bins.mapv(|c| c.norm_sqr()),
        fft_size: spec.fft_size,
        hop: spec.hop,
        sample_rate: spec.sample_rate,
    }
}

/// Sum of squared magnitudes of a one-sided frame, doubled for the bins that
/// have a mirrored negative-frequency partner.
pub fn one_sided_energy(row: &[Complex64], fft_size: usize) -> f64 {
    row.iter()
        .enumerate()
        .map(|(k, c)| {
            let edge = k == 0 || (fft_size % 2 == 0 && k == fft_size / 2);
            let w = if edge { 1.0 } else { 2.0 };
            w * c.norm_sqr()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hanning_closed_forms() {
        let w = WindowFunction::hanning(129).unwrap();
        let c = w.coefficients();
        assert_eq!(c[0], 0.0);
        assert!((c[64] - 1.0).abs() < 1e-15);
        assert!((c[32] - 0.5).abs() < 1e-15);

        let w = WindowFunction::hanning(2048).unwrap();
        let n = 700.0;
        let cosine_form = 0.5 * (1.0 - (2.0 * PI * n / 2047.0).cos());
        let sine_form = (PI * n / 2047.0).sin().powi(2);
        assert!((w.coefficients()[700] - cosine_form).abs() < 1e-12);
        assert!((w.coefficients()[700] - sine_form).abs() < 1e-12);
    }

    #[test]
    fn hanning_rejects_short() {
        assert_eq!(
            WindowFunction::hanning(1),
            Err(SpectralError::DegenerateWindow(1))
        );
    }

    #[test]
    fn impulse_gives_flat_spectrum() {
        let mut s = vec![0.0; 8];
        s[0] = 1.0;
        let buf = AudioBuffer::new(s, 8000).unwrap();
        let spec = stft(&buf, 8, &WindowFunction::rectangular(8).unwrap()).unwrap();
        assert_eq!(spec.num_frames(), 1);
        assert_eq!(spec.num_bins(), 5);
        for c in spec.bins.row(0) {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn frame_count_rules() {
        assert_eq!(frame_count(1, 512), 1);
        assert_eq!(frame_count(2048, 2048), 1);
        assert_eq!(frame_count(2049, 2048), 2);
        assert_eq!(frame_count(128 * 2048, 2048), 128);
    }

    #[test]
    fn short_signal_is_one_padded_frame() {
        let buf = AudioBuffer::new(vec![0.5; 10], 8000).unwrap();
        let spec = stft(&buf, 4, &WindowFunction::hanning(64).unwrap()).unwrap();
        assert_eq!(spec.num_frames(), 3);
        let buf = AudioBuffer::new(vec![0.5; 3], 8000).unwrap();
        let spec = stft(&buf, 4, &WindowFunction::hanning(64).unwrap()).unwrap();
        assert_eq!(spec.num_frames(), 1);
    }

    #[test]
    fn empty_signal_and_bad_sizes() {
        let empty = AudioBuffer::new(vec![], 8000).unwrap();
        let w = WindowFunction::hanning(16).unwrap();
        assert_eq!(stft(&empty, 4, &w), Err(SpectralError::EmptySignal));
        let buf = AudioBuffer::new(vec![0.0; 4], 8000).unwrap();
        assert_eq!(stft(&buf, 0, &w), Err(SpectralError::ZeroHop));
        assert!(matches!(
            stft_with_size(&buf, 32, 4, &w),
            Err(SpectralError::WindowMismatch { .. })
        ));
    }

    #[test]
    fn power_of_three_four() {
        let spec = ComplexSpectrogram {
            bins: Array2::from_elem((1, 1), Complex64::new(3.0, 4.0)),
            fft_size: 1,
            hop: 1,
            sample_rate: 1,
        };
        assert_eq!(power(&spec).values[[0, 0]], 25.0);
    }
}
