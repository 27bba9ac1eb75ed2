//! Generates a four-class synthetic corpus, extracts feature maps, trains the
//! emotion classifier and prints the test confusion matrix.
//!
//! ```text
//! cargo run --release --example synthetic_ser -- [clips-per-class] [seed]
//! ```

use std::time::Instant;

use hpss_ser::classifier::{train, TrainConfig};
use hpss_ser::cli::{embed_maps, extract_maps};
use hpss_ser::featuremap::FeatureMapSpec;
use hpss_ser::hpss::HpssConfig;
use hpss_ser::synth::write_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let per_class: usize = args.next().map_or(Ok(50), |a| a.parse())?;
    let seed: u64 = args.next().map_or(Ok(7), |a| a.parse())?;

    let dir = std::env::temp_dir().join(format!("hpss-ser-synthetic-{seed}"));
    let manifest = write_corpus(&dir, per_class, 5.9, 22050, seed)?;
    println!("wrote {} clips to {}", manifest.len(), dir.display());

    let t = Instant::now();
    let (maps, summary) = extract_maps(&manifest, &FeatureMapSpec::default(), &HpssConfig::default())?;
    println!("extracted {} maps in {:.1?} ({:?})", maps.len(), t.elapsed(), summary.per_class);

    let t = Instant::now();
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let outcome = train(&embed_maps(&maps, None), &cfg)?;
    println!(
        "trained in {:.1?}; best epoch {}; test accuracy {:.2}%",
        t.elapsed(),
        outcome.history.best_epoch,
        100.0 * outcome.report.accuracy
    );
    print!("{}", outcome.report.confusion_table());
    Ok(())
}
