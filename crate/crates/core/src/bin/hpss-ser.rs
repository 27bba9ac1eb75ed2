use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hpss_ser::cli::{
    cmd_eval, cmd_extract, cmd_ingest, cmd_render, cmd_sweep, cmd_train, sweep_csv, CliError,
    Colormap, DatasetManifest, GridCell, Labeling, RunConfig, TrainInput,
};

#[derive(Parser)]
#[command(version, about = "Harmonic/percussive Mel feature maps and emotion classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Geometry {
    #[arg(long)]
    bands: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    /// Target sample rate in Hz.
    #[arg(long)]
    rate: Option<u32>,
    /// Window and FFT size; also sets the hop unless --hop is given.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    hop: Option<usize>,
}

#[derive(Args)]
struct Training {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    /// Keep each speaker inside one partition.
    #[arg(long)]
    speaker_independent: bool,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// Feature map file.
    #[arg(long)]
    maps: Option<PathBuf>,
    /// EMB2 embedding file.
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

impl Input {
    fn resolve(self) -> TrainInput {
        match (self.maps, self.embeddings) {
            (Some(m), _) => TrainInput::Maps(m),
            (None, Some(e)) => TrainInput::Embeddings(e),
            (None, None) => unreachable!("clap enforces one input"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Scan a directory of WAV files and write a manifest CSV.
    Ingest {
        dir: PathBuf,
        /// `path,label[,speaker]` CSV; otherwise labels come from file names.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Decode, resample and build feature maps for every manifest row.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        geometry: Geometry,
        #[command(flatten)]
        common: Common,
    },
    /// Write each map channel as a PNG.
    Render {
        #[arg(long)]
        maps: PathBuf,
        #[arg(long, value_enum, default_value = "grayscale")]
        colormap: Colormap,
        #[command(flatten)]
        common: Common,
    },
    /// Train the classifier and write the checkpoint and test report.
    Train {
        #[command(flatten)]
        input: Input,
        /// Manifest supplying speaker ids for --speaker-independent.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        training: Training,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        common: Common,
    },
    /// Extract and train once per BANDSxFRAMES@RATE cell.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<GridCell>,
        #[command(flatten)]
        geometry: Geometry,
        #[command(flatten)]
        training: Training,
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
    }
    Ok(cfg)
}

fn apply_geometry(cfg: &mut RunConfig, g: &Geometry) {
    let f = &mut cfg.features;
    if let Some(v) = g.bands {
        f.bands = v;
    }
    if let Some(v) = g.frames {
        f.frames = v;
        f.subsample_hop_frames = v;
    }
    if let Some(v) = g.rate {
        f.sample_rate = v;
    }
    if let Some(v) = g.window {
        f.window_size = v;
        f.analysis_hop = v;
    }
    if let Some(v) = g.hop {
        f.analysis_hop = v;
    }
}

fn apply_training(cfg: &mut RunConfig, t: &Training) {
    if let Some(v) = t.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = t.lr {
        cfg.train.learning_rate = v;
    }
    if let Some(v) = t.batch {
        cfg.train.batch_size = v;
    }
    cfg.train.speaker_independent |= t.speaker_independent;
}

fn out_or(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Ingest { dir, labels, common } => {
            let labeling = labels.map_or(Labeling::FilenameRule, Labeling::Manifest);
            let report = cmd_ingest(&dir, &labeling)?;
            let out = out_or(&common, "manifest.csv");
            report.manifest.save(&out)?;
            for (path, why) in &report.skipped {
                eprintln!("skipped {}: {why}", path.display());
            }
            println!("{} files -> {}", report.manifest.len(), out.display());
            Ok(ExitCode::from(u8::from(!report.skipped.is_empty())))
        }
        Command::Extract { manifest, geometry, common } => {
            let mut cfg = load_config(&common)?;
            apply_geometry(&mut cfg, &geometry);
            let out = out_or(&common, "maps.fmap");
            let summary = cmd_extract(&DatasetManifest::load(&manifest)?, &cfg.features, &cfg.hpss, &out)?;
            for (path, why) in &summary.failures {
                eprintln!("failed {}: {why}", path.display());
            }
            println!("{} maps -> {} {:?}", summary.maps, out.display(), summary.per_class);
            Ok(ExitCode::from(summary.exit_code() as u8))
        }
        Command::Render { maps, colormap, common } => {
            let written = cmd_render(&maps, &out_or(&common, "png"), colormap)?;
            println!("wrote {} images", written.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { input, manifest, training, common } => {
            let mut cfg = load_config(&common)?;
            apply_training(&mut cfg, &training);
            let speakers = manifest.map(DatasetManifest::load).transpose()?;
            let out = out_or(&common, "run");
            let outcome = cmd_train(&input.resolve(), &cfg.train, speakers.as_ref(), &out)?;
            print!("{}", outcome.report.confusion_table());
            println!("best epoch {}; outputs in {}", outcome.history.best_epoch, out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { model, input, common } => {
            let report = cmd_eval(&model, &input.resolve())?;
            print!("{}", report.confusion_table());
            if let Some(dir) = &common.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("report.csv"), report.confusion_csv())?;
                std::fs::write(dir.join("report.json"), report.to_json())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { manifest, grid, geometry, training, common } => {
            let mut cfg = load_config(&common)?;
            apply_geometry(&mut cfg, &geometry);
            apply_training(&mut cfg, &training);
            let rows = cmd_sweep(&DatasetManifest::load(&manifest)?, &grid, &cfg.features, &cfg.hpss, &cfg.train)?;
            let table = sweep_csv(&rows);
            print!("{table}");
            std::fs::write(out_or(&common, "sweep.csv"), &table)?;
            let failed = rows.iter().any(|r| r.accuracy.is_err());
            Ok(ExitCode::from(u8::from(failed)))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
