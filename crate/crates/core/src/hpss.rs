//! Harmonic/percussive decomposition of Mel energy grids by directional
//! median filtering.
//!
//! A median along the time axis keeps horizontal ridges (sustained tones);
//! a median along the band axis keeps vertical columns (transients). The two
//! filtered grids are turned into masks that split every cell of the input
//! between a harmonic and a percussive part.

use ndarray::{Array2, Axis, Zip};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::melbank::MelSpectrogram;

#[derive(Debug, Error, PartialEq)]
pub enum HpssError {
    #[error("median kernel length {0} is even")]
    EvenKernel(usize),
    #[error("median kernel length must be at least {min}, got {got}")]
    KernelTooShort { got: usize, min: usize },
    #[error("mask power must be positive")]
    NonPositivePower,
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("decomposition expects linear energies, got a log-scaled grid")]
    LogScaledInput,
    #[error("harmonic and percussive grids differ in shape")]
    GeometryMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// `H^p / (H^p + P^p + eps)` and its percussive counterpart.
    Soft,
    /// Every cell goes wholly to whichever median is larger (ties to harmonic).
    Binary,
    /// No masking: the median-filtered grids themselves are the components.
    RawMedian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HpssConfig {
    /// Median length along frames.
    pub kernel_time: usize,
    /// Median length along bands.
    pub kernel_freq: usize,
    pub mask_power: f64,
    pub mask_mode: MaskMode,
    pub epsilon: f64,
}

impl Default for HpssConfig {
    fn default() -> Self {
        Self {
            kernel_time: 31,
            kernel_freq: 31,
            mask_power: 2.0,
            mask_mode: MaskMode::Soft,
            epsilon: 1e-10,
        }
    }
}

impl HpssConfig {
    pub fn validate(&self) -> Result<(), HpssError> {
        for k in [self.kernel_time, self.kernel_freq] {
            if k % 2 == 0 {
                return Err(HpssError::EvenKernel(k));
            }
            if k < 3 {
                return Err(HpssError::KernelTooShort { got: k, min: 3 });
            }
        }
        if !(self.mask_power > 0.0) {
            return Err(HpssError::NonPositivePower);
        }
        if !(self.epsilon > 0.0) {
            return Err(HpssError::NonPositiveEpsilon);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpssPair {
    pub harmonic: MelSpectrogram,
    pub percussive: MelSpectrogram,
}

/// Maps a possibly out-of-range index onto `0..len` by mirroring about the
/// array edges, repeating the edge sample (`d c b a | a b c d | d c b a`).
fn reflect_index(i: isize, len: usize) -> usize {
    let period = 2 * len as isize;
    let m = i.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Centered running median with mirrored borders; kernel must be odd.
pub fn median_filter_1d(row: &[f64], kernel: usize) -> Result<Vec<f64>, HpssError> {
    if kernel % 2 == 0 {
        return Err(HpssError::EvenKernel(kernel));
    }
    let mut out = vec![0.0; row.len()];
    median_into(row, kernel, &mut out);
    Ok(out)
}

fn median_into(row: &[f64], kernel: usize, out: &mut [f64]) {
    let len = row.len();
    if len == 0 {
        return;
    }
    if kernel == 1 {
        out.copy_from_slice(row);
        return;
    }
    let half = (kernel / 2) as isize;
    let mut window = vec![0.0; kernel];
    for (i, slot) in out.iter_mut().enumerate() {
        for (w, offset) in window.iter_mut().zip(-half..=half) {
            *w = row[reflect_index(i as isize + offset, len)];
        }
        let (_, median, _) = window.select_nth_unstable_by(kernel / 2, f64::total_cmp);
        *slot = *median;
    }
}

/// Applies the running median along `axis` for every lane of the grid.
fn median_along(grid: &Array2<f64>, axis: Axis, kernel: usize) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros(grid.raw_dim());
    let mut lane_buf = Vec::new();
    let mut out_buf = Vec::new();
    for (src, mut dst) in grid.lanes(axis).into_iter().zip(out.lanes_mut(axis)) {
        lane_buf.clear();
        lane_buf.extend(src.iter().copied());
        out_buf.resize(lane_buf.len(), 0.0);
        median_into(&lane_buf, kernel, &mut out_buf);
        for (d, s) in dst.iter_mut().zip(&out_buf) {
            *d = *s;
        }
    }
    out
}

/// Time-direction (per band) and frequency-direction (per frame) medians.
pub fn enhanced_components(
    s: &MelSpectrogram,
    cfg: &HpssConfig,
) -> Result<(Array2<f64>, Array2<f64>), HpssError> {
    cfg.validate()?;
    if s.log_scaled {
        return Err(HpssError::LogScaledInput);
    }
    // values are (bands, frames): lanes along Axis(1) run over frames.
    let harmonic = median_along(&s.values, Axis(1), cfg.kernel_time);
    let percussive = median_along(&s.values, Axis(0), cfg.kernel_freq);
    Ok((harmonic, percussive))
}

pub fn decompose(s: &MelSpectrogram, cfg: &HpssConfig) -> Result<HpssPair, HpssError> {
    let (h_enh, p_enh) = enhanced_components(s, cfg)?;
    let wrap = |values| MelSpectrogram {
        values,
        sample_rate: s.sample_rate,
        log_scaled: false,
    };

    let (harmonic, percussive) = match cfg.mask_mode {
        MaskMode::RawMedian => (h_enh, p_enh),
        MaskMode::Soft => {
            let p = cfg.mask_power;
            let mut h = Array2::<f64>::zeros(s.values.raw_dim());
            let mut q = Array2::<f64>::zeros(s.values.raw_dim());
            Zip::from(&mut h)
                .and(&mut q)
                .and(&s.values)
                .and(&h_enh)
                .and(&p_enh)
                .for_each(|h, q, &x, &he, &pe| {
                    let hp = he.powf(p);
                    let pp = pe.powf(p);
                    let denom = hp + pp + cfg.epsilon;
                    *h = x * hp / denom;
                    *q = x * pp / denom;
                });
            (h, q)
        }
        MaskMode::Binary => {
            let mut h = Array2::<f64>::zeros(s.values.raw_dim());
            let mut q = Array2::<f64>::zeros(s.values.raw_dim());
            Zip::from(&mut h)
                .and(&mut q)
                .and(&s.values)
                .and(&h_enh)
                .and(&p_enh)
                .for_each(|h, q, &x, &he, &pe| {
                    if he >= pe {
                        *h = x;
                    } else {
                        *q = x;
                    }
                });
            (h, q)
        }
    };
    Ok(HpssPair {
        harmonic: wrap(harmonic),
        percussive: wrap(percussive),
    })
}

/// Cellwise mean of the harmonic and percussive grids.
pub fn averaged_hp(pair: &HpssPair) -> Result<MelSpectrogram, HpssError> {
    if pair.harmonic.values.dim() != pair.percussive.values.dim() {
        return Err(HpssError::GeometryMismatch);
    }
    let values = Zip::from(&pair.harmonic.values)
        .and(&pair.percussive.values)
        .map_collect(|&h, &p| (h + p) / 2.0);
    Ok(MelSpectrogram {
        values,
        sample_rate: pair.harmonic.sample_rate,
        log_scaled: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sort-based windowed median over an explicitly padded copy.
    fn oracle_median(row: &[f64], kernel: usize) -> Vec<f64> {
        let half = kernel / 2;
        let n = row.len();
        let mut padded = Vec::new();
        // Mirror with edge repetition, iterated for kernels longer than the row.
        let at = |i: isize| -> f64 {
            let mut i = i;
            loop {
                if i < 0 {
                    i = -i - 1;
                } else if i >= n as isize {
                    i = 2 * n as isize - 1 - i;
                } else {
                    return row[i as usize];
                }
            }
        };
        for i in -(half as isize)..(n + half) as isize {
            padded.push(at(i));
        }
        (0..n)
            .map(|i| {
                let mut w = padded[i..i + kernel].to_vec();
                w.sort_by(f64::total_cmp);
                w[half]
            })
            .collect()
    }

    #[test]
    fn alternating_example() {
        let row = [1.0, 9.0, 1.0, 9.0, 1.0];
        let expected = oracle_median(&row, 3);
        assert_eq!(expected, vec![1.0, 1.0, 9.0, 1.0, 1.0]);
        assert_eq!(median_filter_1d(&row, 3).unwrap(), expected);
    }

    #[test]
    fn kernel_one_and_constants() {
        let row = [3.0, -1.0, 2.5];
        assert_eq!(median_filter_1d(&row, 1).unwrap(), row.to_vec());
        assert_eq!(median_filter_1d(&[4.0; 7], 5).unwrap(), vec![4.0; 7]);
        assert_eq!(median_filter_1d(&row, 4), Err(HpssError::EvenKernel(4)));
        assert!(median_filter_1d(&[], 3).unwrap().is_empty());
    }

    #[test]
    fn matches_oracle_on_long_kernels() {
        let row: Vec<f64> = (0..11).map(|i| ((i * 7919) % 13) as f64).collect();
        for k in [3, 5, 9, 21, 31] {
            assert_eq!(median_filter_1d(&row, k).unwrap(), oracle_median(&row, k), "k={k}");
        }
    }

    #[test]
    fn reflect_index_wraps() {
        let idx: Vec<usize> = (-4..8).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = HpssConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.kernel_time = 4;
        assert_eq!(cfg.validate(), Err(HpssError::EvenKernel(4)));
        cfg.kernel_time = 1;
        assert!(matches!(cfg.validate(), Err(HpssError::KernelTooShort { .. })));
        cfg = HpssConfig {
            mask_power: 0.0,
            ..HpssConfig::default()
        };
        assert_eq!(cfg.validate(), Err(HpssError::NonPositivePower));
    }

    #[test]
    fn constant_grid_splits_in_half() {
        let s = MelSpectrogram::from_energies(Array2::from_elem((16, 20), 2.0), 8000);
        let pair = decompose(&s, &HpssConfig::default()).unwrap();
        for (h, p) in pair.harmonic.values.iter().zip(&pair.percussive.values) {
            assert!((h - 1.0).abs() < 1e-9);
            assert!((p - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_log_input() {
        let mut s = MelSpectrogram::from_energies(Array2::zeros((3, 3)), 8000);
        s.log_scaled = true;
        assert_eq!(
            decompose(&s, &HpssConfig::default()),
            Err(HpssError::LogScaledInput)
        );
    }

    #[test]
    fn raw_median_mode_returns_filters() {
        let mut v = Array2::<f64>::zeros((9, 9));
        v.row_mut(4).fill(1.0);
        let s = MelSpectrogram::from_energies(v, 8000);
        let cfg = HpssConfig {
            kernel_time: 3,
            kernel_freq: 3,
            mask_mode: MaskMode::RawMedian,
            ..HpssConfig::default()
        };
        let pair = decompose(&s, &cfg).unwrap();
        assert_eq!(pair.harmonic.values.row(4).sum(), 9.0);
        assert_eq!(pair.percussive.values.sum(), 0.0);
    }

    #[test]
    fn averaged_identity_under_equality() {
        let x = MelSpectrogram::from_energies(ndarray::arr2(&[[1.0, 2.0], [3.0, 4.0]]), 8000);
        let pair = HpssPair {
            harmonic: x.clone(),
            percussive: x.clone(),
        };
        assert_eq!(averaged_hp(&pair).unwrap(), x);
    }
}
