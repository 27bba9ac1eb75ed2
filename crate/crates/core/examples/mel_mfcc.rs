//! Mel filterbank geometry, log-Mel energies and MFCCs of a two-tone signal.

use hpss_ser::audio::AudioBuffer;
use hpss_ser::melbank::{log_mel, mel_spectrogram, mfcc, MelFilterbank, DEFAULT_LOG_FLOOR, DEFAULT_MFCC_COEFFS};
use hpss_ser::spectral::{power, stft, WindowFunction};
use hpss_ser::synth::sine;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sr = 22050;
    let fb = MelFilterbank::full_band(sr, 1024, 40)?;
    let centers = fb.centers();
    println!(
        "{} bands over {} bins; first centers {:.0?} Hz, last {:.0} Hz",
        fb.num_bands(),
        fb.num_bins(),
        &centers[..4],
        centers[centers.len() - 1]
    );

    let len = sr as usize;
    let mix: Vec<f64> = sine(300.0, 0.5, len, sr)
        .iter()
        .zip(sine(3000.0, 0.2, len, sr))
        .map(|(a, b)| a + b)
        .collect();
    let buf = AudioBuffer::new(mix, sr)?;
    let pow = power(&stft(&buf, 512, &WindowFunction::hanning(1024)?)?);
    let mel = mel_spectrogram(&pow, &fb)?;
    let lm = log_mel(&mel, DEFAULT_LOG_FLOOR)?;

    let frame = lm.frame_count() / 2;
    let col = lm.values.column(frame);
    let mut bands: Vec<usize> = (0..col.len()).collect();
    bands.sort_by(|&a, &b| col[b].total_cmp(&col[a]));
    for &b in &bands[..2] {
        println!("loud band {b:2} (center {:6.0} Hz): log energy {:.2}", centers[b], col[b]);
    }

    let c = mfcc(&lm, DEFAULT_MFCC_COEFFS)?;
    let coeffs: Vec<String> = c.column(frame).iter().map(|v| format!("{v:.2}")).collect();
    println!("MFCCs of frame {frame}: [{}]", coeffs.join(", "));
    Ok(())
}
