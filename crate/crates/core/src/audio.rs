//! WAV decoding, PCM16 encoding and band-limited resampling.

use std::f64::consts::PI;
use std::io::Cursor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed RIFF/WAVE header: {0}")]
    MalformedHeader(String),
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("declared data length exceeds payload")]
    TruncatedData,
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Mono float samples in `[-1, 1]` at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Wraps samples, clamping non-finite values to zero and everything else into `[-1, 1]`.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        let samples = samples
            .into_iter()
            .map(|s| if s.is_finite() { s.clamp(-1.0, 1.0) } else { 0.0 })
            .collect();
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Decodes a RIFF/WAVE byte stream into a mono buffer.
///
/// Integer PCM is divided by the type's maximum magnitude (`2^(bits-1)`),
/// channels are averaged, and float data is passed through.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, AudioError> {
    if let Some(tag) = fmt_tag(bytes) {
        if !matches!(tag, 1 | 3 | 0xFFFE) {
            return Err(AudioError::UnsupportedEncoding(format!("format tag {tag:#06x}")));
        }
    }
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let declared = reader.len() as usize;

    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(AudioError::UnsupportedEncoding(format!(
                    "{}-bit float",
                    spec.bits_per_sample
                )));
            }
            reader
                .into_samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<Result<_, _>>()
                .map_err(map_hound)?
        }
        hound::SampleFormat::Int => {
            let bits = spec.bits_per_sample;
            if !matches!(bits, 8 | 16 | 24 | 32) {
                return Err(AudioError::UnsupportedEncoding(format!("{bits}-bit PCM")));
            }
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(map_hound)?
        }
    };
    if interleaved.len() < declared {
        return Err(AudioError::TruncatedData);
    }

    let mono = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    AudioBuffer::new(mono, spec.sample_rate)
}

/// Format tag of the first `fmt ` chunk, if the RIFF layout gets that far.
fn fmt_tag(bytes: &[u8]) -> Option<u16> {
    if bytes.get(0..4)? != b"RIFF" || bytes.get(8..12)? != b"WAVE" {
        return None;
    }
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().ok()?) as usize;
        if id == b"fmt " {
            return Some(u16::from_le_bytes(bytes.get(pos + 8..pos + 10)?.try_into().ok()?));
        }
        pos = pos.checked_add(8 + size + (size & 1))?;
    }
    None
}

fn map_hound(err: hound::Error) -> AudioError {
    match err {
        hound::Error::IoError(e)
            if e.kind() == std::io::ErrorKind::UnexpectedEof
                || e.to_string().contains("enough bytes") =>
        {
            AudioError::TruncatedData
        }
        hound::Error::IoError(e) => AudioError::Io(e),
        hound::Error::FormatError(msg) => AudioError::MalformedHeader(msg.to_string()),
        hound::Error::Unsupported => {
            AudioError::UnsupportedEncoding("compressed or unknown format tag".into())
        }
        hound::Error::InvalidSampleFormat => {
            AudioError::UnsupportedEncoding("invalid sample format".into())
        }
        hound::Error::TooWide => AudioError::UnsupportedEncoding("sample too wide".into()),
        hound::Error::UnfinishedSample => AudioError::TruncatedData,
    }
}

/// Encodes a buffer as mono 16-bit PCM WAV.
pub fn encode_wav_pcm16(buf: &AudioBuffer) -> Result<Vec<u8>, AudioError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut out = Cursor::new(Vec::new());
    {
        let mut writer = hound::WavWriter::new(&mut out, spec).map_err(map_hound)?;
        for &s in &buf.samples {
            let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            writer.write_sample(v).map_err(map_hound)?;
        }
        writer.finalize().map_err(map_hound)?;
    }
    Ok(out.into_inner())
}

const ZERO_CROSSINGS: usize = 64;
const KAISER_BETA: f64 = 12.0;
const MAX_CACHED_PHASES: usize = 4096;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Windowed-sinc resampler (64 zero crossings, Kaiser window with beta 12).
///
/// Returns the input unchanged when the rates already match. The output has
/// `round(len * target / source)` samples, so durations agree within one
/// output sample.
pub fn resample(buf: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer, AudioError> {
    if target_rate == 0 {
        return Err(AudioError::ZeroSampleRate);
    }
    let src_rate = buf.sample_rate as u64;
    let dst_rate = target_rate as u64;
    if src_rate == dst_rate {
        return Ok(buf.clone());
    }

    let input = &buf.samples;
    let out_len = ((input.len() as u64 * dst_rate + src_rate / 2) / src_rate) as usize;
    // Cutoff relative to the input Nyquist; below 1 when downsampling.
    let cutoff = (dst_rate as f64 / src_rate as f64).min(1.0);
    let half_width = ZERO_CROSSINGS as f64 / cutoff;
    let i0_beta = bessel_i0(KAISER_BETA);

    // Fractional positions repeat with period dst_rate / gcd, so each phase's
    // taps are computed once.
    let phases = (dst_rate / gcd(src_rate, dst_rate)) as usize;
    let phase_step = dst_rate / phases as u64;
    let mut table: Vec<Option<(i64, Vec<f64>)>> = vec![None; phases.min(MAX_CACHED_PHASES)];

    let taps_for = |num: u64| -> (i64, Vec<f64>) {
        let frac = num as f64 / dst_rate as f64;
        let first = (frac - half_width).ceil() as i64;
        let last = (frac + half_width).floor() as i64;
        let taps = (first..=last)
            .map(|d| kernel(frac - d as f64, cutoff, half_width, i0_beta))
            .collect();
        (first, taps)
    };

    let mut out = Vec::with_capacity(out_len);
    let n_in = input.len() as i64;
    for i in 0..out_len as u64 {
        // Exact rational position in input samples: whole + num/dst_rate.
        let whole = (i * src_rate / dst_rate) as i64;
        let num = i * src_rate % dst_rate;
        let phase = (num / phase_step) as usize;
        let owned;
        let (first, taps): &(i64, Vec<f64>) = if phase < table.len() {
            table[phase].get_or_insert_with(|| taps_for(num))
        } else {
            owned = taps_for(num);
            &owned
        };
        let start = whole + first;
        let lo = (-start).max(0) as usize;
        let hi = (n_in - start).clamp(0, taps.len() as i64) as usize;
        let mut acc = 0.0;
        for k in lo..hi {
            acc += input[(start + k as i64) as usize] * taps[k];
        }
        out.push(acc);
    }
    AudioBuffer::new(out, target_rate)
}

fn kernel(t: f64, cutoff: f64, half_width: f64, i0_beta: f64) -> f64 {
    let ratio = t / half_width;
    if ratio.abs() >= 1.0 {
        return 0.0;
    }
    let window = bessel_i0(KAISER_BETA * (1.0 - ratio * ratio).sqrt()) / i0_beta;
    let x = cutoff * t;
    let sinc = if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    };
    cutoff * sinc * window
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= (half / k) * (half / k);
        sum += term;
        k += 1.0;
    }
    sum
}
