//! Builds two-channel feature maps from a clip, stores them in an FMAP file,
//! reads them back and renders each channel as a PNG.
//!
//! ```text
//! cargo run --release --example feature_maps -- [out-dir]
//! ```

use hpss_ser::audio::{resample, AudioBuffer};
use hpss_ser::cli::{render_maps, Colormap};
use hpss_ser::featuremap::{load_maps, save_maps, FeatureExtractor, FeatureMapSpec};
use hpss_ser::hpss::HpssConfig;
use hpss_ser::synth::SignalKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("hpss-ser-feature-maps"), Into::into);
    std::fs::create_dir_all(&out)?;

    let spec = FeatureMapSpec::default();
    println!(
        "{} bands x {} frames at {} Hz, window {}: {} samples ({:.3} s) per map",
        spec.bands,
        spec.frames,
        spec.sample_rate,
        spec.window_size,
        spec.subsample_len(),
        spec.subsample_secs()
    );
    let extractor = FeatureExtractor::new(spec, HpssConfig::default())?;

    let mut maps = Vec::new();
    for kind in SignalKind::ALL {
        let clip = AudioBuffer::new(kind.generate(11, 22050 * 4, 22050), 22050)?;
        let clip = resample(&clip, spec.sample_rate)?;
        let built = extractor.build_all(&clip, Some(kind.label()), &format!("{kind:?}"))?;
        println!("{kind:?}: {} maps", built.len());
        maps.extend(built);
    }

    let file = out.join("maps.fmap");
    save_maps(&maps, &file)?;
    let loaded = load_maps(&file)?;
    assert_eq!(loaded, maps);
    println!("{} maps round-tripped through {}", loaded.len(), file.display());

    let pngs = render_maps(&loaded, &out, Colormap::Heat)?;
    println!("wrote {} images to {}", pngs.len(), out.display());
    Ok(())
}
