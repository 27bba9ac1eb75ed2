//! Hanning STFT of a linear chirp: prints the dominant bin of a few frames and
//! checks frame energy against the windowed time-domain energy.

use hpss_ser::audio::AudioBuffer;
use hpss_ser::spectral::{one_sided_energy, power, stft, WindowFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sr = 16000;
    let (f_start, f_end, secs) = (200.0, 6000.0, 1.0);
    let len = (sr as f64 * secs) as usize;
    let chirp: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 / sr as f64;
            let phase = 2.0 * std::f64::consts::PI * (f_start * t + (f_end - f_start) * t * t / (2.0 * secs));
            0.8 * phase.sin()
        })
        .collect();
    let buf = AudioBuffer::new(chirp, sr)?;

    let window = WindowFunction::hanning(512)?;
    let hop = 256;
    let spec = stft(&buf, hop, &window)?;
    let pow = power(&spec);
    println!("{} frames x {} bins", pow.num_frames(), pow.num_bins());

    let bin_hz = sr as f64 / window.len() as f64;
    for n in (0..pow.num_frames()).step_by(10) {
        let row = pow.values.row(n);
        let peak = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        let t = (n * hop + window.len() / 2) as f64 / sr as f64;
        let expected = f_start + (f_end - f_start) * t / secs;
        println!("frame {n:3}: peak {:7.1} Hz (instantaneous {expected:7.1} Hz)", peak as f64 * bin_hz);
    }

    let n = 20;
    let frame_energy: f64 = buf.samples()[n * hop..n * hop + window.len()]
        .iter()
        .zip(window.coefficients())
        .map(|(x, w)| (x * w).powi(2))
        .sum();
    let row: Vec<_> = spec.bins.row(n).to_vec();
    let spectral = one_sided_energy(&row, window.len()) / window.len() as f64;
    println!("frame {n} energy: time {frame_energy:.6}, spectrum {spectral:.6}");
    Ok(())
}
