//! Splits the Mel energies of a tone-plus-clicks mixture into harmonic and
//! percussive parts under each mask mode.

use hpss_ser::audio::AudioBuffer;
use hpss_ser::hpss::{averaged_hp, decompose, HpssConfig, MaskMode};
use hpss_ser::melbank::{mel_spectrogram, MelFilterbank};
use hpss_ser::spectral::{power, stft, WindowFunction};
use hpss_ser::synth::{click_train, sine};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sr = 22050;
    let len = 2 * sr as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tone = sine(440.0, 0.3, len, sr);
    let clicks = click_train(&mut rng, 8.0, len, sr);

    let window = WindowFunction::hanning(1024)?;
    let fb = MelFilterbank::full_band(sr, 1024, 64)?;
    let mel_of = |x: Vec<f64>| -> Result<_, Box<dyn std::error::Error>> {
        let buf = AudioBuffer::new(x, sr)?;
        Ok(mel_spectrogram(&power(&stft(&buf, 256, &window)?), &fb)?)
    };
    let s = mel_of(tone.iter().zip(&clicks).map(|(a, b)| a + b).collect())?;
    let tone_only = mel_of(tone)?.values.sum();
    let clicks_only = mel_of(clicks)?.values.sum();
    println!(
        "{} bands x {} frames; energy share of the tone alone {:.1}%",
        s.band_count(),
        s.frame_count(),
        100.0 * tone_only / (tone_only + clicks_only)
    );

    for mode in [MaskMode::Soft, MaskMode::Binary, MaskMode::RawMedian] {
        let cfg = HpssConfig { mask_mode: mode, ..HpssConfig::default() };
        let pair = decompose(&s, &cfg)?;
        let (h, p) = (pair.harmonic.values.sum(), pair.percussive.values.sum());
        let avg = averaged_hp(&pair)?.values.sum();
        println!(
            "{mode:?}: harmonic {:.1}%, percussive {:.1}%, (H+P)/2 holds {:.3} of the input energy",
            100.0 * h / (h + p),
            100.0 * p / (h + p),
            avg / s.values.sum()
        );
    }
    Ok(())
}
