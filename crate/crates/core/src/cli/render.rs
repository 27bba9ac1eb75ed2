use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::featuremap::{load_maps, FeatureMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Colormap {
    Grayscale,
    /// Black, red, yellow, white.
    Heat,
}

/// 8-bit intensity of a normalized cell.
pub fn intensity(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn heat(v: f32) -> [u8; 3] {
    let t = v.clamp(0.0, 1.0) * 3.0;
    let ramp = |x: f32| intensity(x.clamp(0.0, 1.0));
    [ramp(t), ramp(t - 1.0), ramp(t - 2.0)]
}

/// Raster bytes for one channel, band 0 on the bottom row.
pub fn raster(channel: &Array2<f32>, colormap: Colormap) -> Vec<u8> {
    let (bands, frames) = channel.dim();
    let mut out = Vec::with_capacity(bands * frames * 3);
    for row in (0..bands).rev() {
        for n in 0..frames {
            let v = channel[[row, n]];
            match colormap {
                Colormap::Grayscale => out.push(intensity(v)),
                Colormap::Heat => out.extend_from_slice(&heat(v)),
            }
        }
    }
    out
}

pub fn encode_png(channel: &Array2<f32>, colormap: Colormap) -> Result<Vec<u8>, CliError> {
    let (bands, frames) = channel.dim();
    let mut bytes = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut bytes, frames as u32, bands as u32);
        enc.set_color(match colormap {
            Colormap::Grayscale => png::ColorType::Grayscale,
            Colormap::Heat => png::ColorType::Rgb,
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc
            .write_header()
            .map_err(|e| CliError::Render(e.to_string()))?;
        w.write_image_data(&raster(channel, colormap))
            .map_err(|e| CliError::Render(e.to_string()))?;
    }
    Ok(bytes)
}

/// Writes `map{index:05}_{channel}.png` for every map and channel.
pub fn render_maps(
    maps: &[FeatureMap],
    out_dir: &Path,
    colormap: Colormap,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (i, map) in maps.iter().enumerate() {
        for (ch, name) in map.channels.iter().zip(FeatureMap::CHANNEL_NAMES) {
            let path = out_dir.join(format!("map{i:05}_{name}.png"));
            std::fs::write(&path, encode_png(ch, colormap)?)?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn cmd_render(maps_file: &Path, out_dir: &Path, colormap: Colormap) -> Result<Vec<PathBuf>, CliError> {
    let maps = load_maps(maps_file)?;
    render_maps(&maps, out_dir, colormap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_zero_is_bottom_row() {
        let ch = ndarray::arr2(&[[0.0f32, 1.0], [0.5, 0.25]]);
        assert_eq!(raster(&ch, Colormap::Grayscale), vec![128, 64, 0, 255]);
    }

    #[test]
    fn heat_endpoints() {
        assert_eq!(heat(0.0), [0, 0, 0]);
        assert_eq!(heat(1.0), [255, 255, 255]);
        assert_eq!(heat(1.0 / 3.0), [255, 0, 0]);
    }
}
