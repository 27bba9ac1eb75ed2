use std::path::Path;

use crate::binio::{FormatError, Reader, Writer};
use crate::featuremap::{EmotionLabel, FeatureMap};

use super::mlp::EMBEDDING_DIM;

/// Pooled grid side; two channels of `POOL_SIDE^2` give [`EMBEDDING_DIM`].
pub const POOL_SIDE: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("embedding has dimension {0}, expected {EMBEDDING_DIM}")]
    WrongDimension(usize),
    #[error("embedding contains non-finite values")]
    NonFinite,
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A 2048-value feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbeddingError> {
        if values.len() != EMBEDDING_DIM {
            return Err(EmbeddingError::WrongDimension(values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }
}

/// Pooling windows `[floor(i*len/32), floor((i+1)*len/32))`, widened to one
/// cell when the axis is shorter than the grid.
fn pool_bounds(len: usize) -> Vec<(usize, usize)> {
    (0..POOL_SIDE)
        .map(|i| {
            let start = (i * len / POOL_SIDE).min(len.saturating_sub(1));
            let end = ((i + 1) * len / POOL_SIDE).max(start + 1);
            (start, end)
        })
        .collect()
}

/// Average-pools each channel onto a 32x32 grid and concatenates the two
/// flattened grids, channel-major.
pub fn pool_embed(map: &FeatureMap) -> EmbeddingVector {
    let rows = pool_bounds(map.bands());
    let cols = pool_bounds(map.frames());
    let mut out = Vec::with_capacity(EMBEDDING_DIM);
    for ch in &map.channels {
        for &(r0, r1) in &rows {
            for &(c0, c1) in &cols {
                let block = ch.slice(ndarray::s![r0..r1, c0..c1]);
                let mean = block.iter().map(|&v| v as f64).sum::<f64>() / block.len() as f64;
                out.push(mean as f32);
            }
        }
    }
    EmbeddingVector(out)
}

const MAGIC: &[u8; 4] = b"EMB2";
const VERSION: u16 = 1;

/// Encodes labelled vectors in the `EMB2` exchange format.
pub fn encode_embeddings(items: &[(EmbeddingVector, EmotionLabel)]) -> Vec<u8> {
    let mut w = Writer::new(MAGIC, VERSION);
    w.u32(EMBEDDING_DIM as u32);
    w.u32(items.len() as u32);
    for (v, label) in items {
        w.u8(label.ordinal() as u8);
        for x in v.values() {
            w.f32(*x);
        }
    }
    w.finish()
}

pub fn decode_embeddings(
    data: &[u8],
) -> Result<Vec<(EmbeddingVector, EmotionLabel)>, EmbeddingError> {
    let mut r = Reader::open(data, MAGIC, VERSION)?;
    let dim = r.u32()? as usize;
    if dim != EMBEDDING_DIM {
        return Err(EmbeddingError::WrongDimension(dim));
    }
    let count = r.u32()? as usize;
    if r.remaining() != count * (1 + 4 * dim) {
        return Err(FormatError::CorruptFile("record count does not match payload".into()).into());
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let code = r.u8()?;
        let label = EmotionLabel::from_ordinal(code as usize).ok_or_else(|| {
            FormatError::CorruptFile(format!("label ordinal {code} out of range"))
        })?;
        let values = (0..dim).map(|_| r.f32()).collect::<Result<Vec<_>, _>>()?;
        out.push((EmbeddingVector::new(values)?, label));
    }
    r.finish()?;
    Ok(out)
}

pub fn export_embeddings(
    items: &[(EmbeddingVector, EmotionLabel)],
    path: impl AsRef<Path>,
) -> Result<(), EmbeddingError> {
    std::fs::write(path, encode_embeddings(items))?;
    Ok(())
}

pub fn import_embeddings(
    path: impl AsRef<Path>,
) -> Result<Vec<(EmbeddingVector, EmotionLabel)>, EmbeddingError> {
    decode_embeddings(&std::fs::read(path)?)
}
