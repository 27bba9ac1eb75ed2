//! Runs a small band/frame/rate sweep over a generated corpus and prints the
//! accuracy table.

use hpss_ser::cli::{cmd_sweep, sweep_csv, GridCell};
use hpss_ser::classifier::TrainConfig;
use hpss_ser::featuremap::FeatureMapSpec;
use hpss_ser::hpss::HpssConfig;
use hpss_ser::synth::write_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("hpss-ser-sweep");
    let manifest = write_corpus(&dir, 20, 3.0, 16000, 9)?;
    let grid: Vec<GridCell> = ["32x32@16000", "64x32@16000", "32x64@22050"]
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_, _>>()?;
    let base = FeatureMapSpec::new(32, 32, 16000, 512);
    let cfg = TrainConfig { epochs: 60, learning_rate: 1e-3, seed: 9, ..TrainConfig::default() };
    let rows = cmd_sweep(&manifest, &grid, &base, &HpssConfig::default(), &cfg)?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}
