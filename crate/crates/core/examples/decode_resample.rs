//! Decodes a WAV file (or a generated tone) and resamples it to the analysis
//! rate and back.
//!
//! ```text
//! cargo run --release --example decode_resample -- [file.wav] [target-rate]
//! ```

use hpss_ser::audio::{decode_wav, encode_wav_pcm16, resample, AudioBuffer};
use hpss_ser::synth::sine;

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next();
    let target: u32 = args.next().map_or(Ok(88200), |a| a.parse())?;

    let buf = match &path {
        Some(p) => decode_wav(&std::fs::read(p)?)?,
        None => {
            let tone = AudioBuffer::new(sine(440.0, 0.5, 16000, 16000), 16000)?;
            decode_wav(&encode_wav_pcm16(&tone)?)?
        }
    };
    println!(
        "input: {} samples at {} Hz ({:.3} s), rms {:.4}",
        buf.len(),
        buf.sample_rate(),
        buf.duration_secs(),
        rms(buf.samples())
    );

    let up = resample(&buf, target)?;
    println!("resampled: {} samples at {} Hz, rms {:.4}", up.len(), up.sample_rate(), rms(up.samples()));

    let back = resample(&up, buf.sample_rate())?;
    let n = back.len().min(buf.len());
    // Edges carry the filter transient.
    let (lo, hi) = (n / 10, n - n / 10);
    let err = buf.samples()[lo..hi]
        .iter()
        .zip(&back.samples()[lo..hi])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("round trip {} -> {} -> {} Hz: max interior error {err:.2e}", buf.sample_rate(), target, back.sample_rate());
    Ok(())
}
