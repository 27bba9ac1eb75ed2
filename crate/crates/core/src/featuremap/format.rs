//! `FMAP` container: magic, version, count, then per map
//! `bands u16 | frames u16 | channels u16 | label u8 | id_len u16 | id | f32 values`,
//! closed by a CRC32 of everything before it.

use std::path::Path;

use ndarray::Array2;

use super::{EmotionLabel, FeatureMap};
use crate::binio::{FormatError, Reader, Writer};

const MAGIC: &[u8; 4] = b"FMAP";
pub const FMAP_VERSION: u16 = 1;
const UNLABELED: u8 = 255;

pub fn encode_maps(maps: &[FeatureMap]) -> Result<Vec<u8>, FormatError> {
    let mut w = Writer::new(MAGIC, FMAP_VERSION);
    let count = u32::try_from(maps.len())
        .map_err(|_| FormatError::CorruptFile("too many maps".into()))?;
    w.u32(count);
    for map in maps {
        let (bands, frames) = map.channels[0].dim();
        let fits = |v: usize| u16::try_from(v).map_err(|_| FormatError::CorruptFile(format!("dimension {v} exceeds u16")));
        w.u16(fits(bands)?);
        w.u16(fits(frames)?);
        w.u16(2);
        w.u8(map.label.map_or(UNLABELED, |l| l.ordinal() as u8));
        let id = map.source_id.as_bytes();
        w.u16(fits(id.len())?);
        w.bytes(id);
        for ch in &map.channels {
            // logical (band-major) order regardless of memory layout
            for v in ch.iter() {
                w.f32(*v);
            }
        }
    }
    Ok(w.finish())
}

pub fn decode_maps(data: &[u8]) -> Result<Vec<FeatureMap>, FormatError> {
    let mut r = Reader::open(data, MAGIC, FMAP_VERSION)?;
    let count = r.u32()? as usize;
    let mut maps = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let bands = r.u16()? as usize;
        let frames = r.u16()? as usize;
        let channels = r.u16()?;
        if channels != 2 {
            return Err(FormatError::CorruptFile(format!("{channels} channels, expected 2")));
        }
        let label = match r.u8()? {
            UNLABELED => None,
            b => Some(EmotionLabel::from_ordinal(b as usize).ok_or_else(|| {
                FormatError::CorruptFile(format!("label ordinal {b} out of range"))
            })?),
        };
        let id_len = r.u16()? as usize;
        let source_id = String::from_utf8(r.bytes(id_len)?.to_vec())
            .map_err(|_| FormatError::CorruptFile("source id is not UTF-8".into()))?;
        let cells = bands * frames;
        if r.remaining() < cells * 2 * 4 {
            return Err(FormatError::CorruptFile("unexpected end of data".into()));
        }
        let mut read_channel = || -> Result<Array2<f32>, FormatError> {
            let vals = (0..cells).map(|_| r.f32()).collect::<Result<Vec<_>, _>>()?;
            Ok(Array2::from_shape_vec((bands, frames), vals).expect("length matches shape"))
        };
        let c0 = read_channel()?;
        let c1 = read_channel()?;
        maps.push(FeatureMap {
            channels: [c0, c1],
            label,
            source_id,
        });
    }
    r.finish()?;
    Ok(maps)
}

#[derive(Debug, thiserror::Error)]
pub enum MapFileError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub fn save_maps(maps: &[FeatureMap], path: impl AsRef<Path>) -> Result<(), MapFileError> {
    std::fs::write(path, encode_maps(maps)?)?;
    Ok(())
}

pub fn load_maps(path: impl AsRef<Path>) -> Result<Vec<FeatureMap>, MapFileError> {
    Ok(decode_maps(&std::fs::read(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(label: Option<EmotionLabel>, id: &str, seed: f32) -> FeatureMap {
        let c0 = Array2::from_shape_fn((3, 5), |(b, n)| seed + b as f32 * 0.1 + n as f32);
        let c1 = c0.mapv(|v| -v);
        FeatureMap::new([c0, c1], label, id).unwrap()
    }

    #[test]
    fn empty_sequence() {
        let bytes = encode_maps(&[]).unwrap();
        assert_eq!(bytes.len(), 4 + 2 + 4 + 4);
        assert!(decode_maps(&bytes).unwrap().is_empty());
    }

    #[test]
    fn mixed_labels_round_trip() {
        let maps = vec![
            map(Some(EmotionLabel::Anger), "a.wav#0", 0.5),
            map(None, "ü.wav#1", f32::MIN_POSITIVE),
            map(Some(EmotionLabel::Sadness), "", -0.0),
        ];
        let back = decode_maps(&encode_maps(&maps).unwrap()).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in maps.iter().zip(&back) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.source_id, b.source_id);
            for (ca, cb) in a.channels.iter().zip(&b.channels) {
                let bits_a: Vec<u32> = ca.iter().map(|v| v.to_bits()).collect();
                let bits_b: Vec<u32> = cb.iter().map(|v| v.to_bits()).collect();
                assert_eq!(bits_a, bits_b);
            }
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode_maps(&[map(Some(EmotionLabel::Fear), "xy", 1.0)]).unwrap();
        assert_eq!(&bytes[..4], b"FMAP");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 1);
        assert_eq!(u16::from_le_bytes([bytes[10], bytes[11]]), 3);
        assert_eq!(u16::from_le_bytes([bytes[12], bytes[13]]), 5);
        assert_eq!(u16::from_le_bytes([bytes[14], bytes[15]]), 2);
        assert_eq!(bytes[16], 3);
        assert_eq!(u16::from_le_bytes([bytes[17], bytes[18]]), 2);
        assert_eq!(&bytes[19..21], b"xy");
        // first value is channel 0, band 0, frame 0; second is frame 1
        assert_eq!(f32::from_le_bytes(bytes[21..25].try_into().unwrap()), 1.0);
        assert_eq!(f32::from_le_bytes(bytes[25..29].try_into().unwrap()), 2.0);
        assert_eq!(bytes.len(), 21 + 2 * 15 * 4 + 4);
    }

    #[test]
    fn flipped_checksum_byte() {
        let mut bytes = encode_maps(&[map(None, "x", 0.0)]).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xff;
        assert!(matches!(decode_maps(&bytes), Err(FormatError::CorruptFile(_))));
    }

    #[test]
    fn version_mismatch() {
        let mut w = Writer::new(MAGIC, 9);
        w.u32(0);
        assert!(matches!(
            decode_maps(&w.finish()),
            Err(FormatError::VersionMismatch { found: 9, .. })
        ));
    }
}
