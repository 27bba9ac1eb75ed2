mod common;

use std::path::Path;

use hpss_ser::audio::{encode_wav_pcm16, AudioBuffer};
use hpss_ser::classifier::{encode_embeddings, EmbeddingVector, TrainConfig, EMBEDDING_DIM};
use hpss_ser::cli::{
    cmd_eval, cmd_extract, cmd_ingest, cmd_render, cmd_sweep, cmd_train, extract_maps,
    sweep_csv, CliError, Colormap, DatasetManifest, GridCell, Labeling, ManifestRow, TrainInput,
};
use hpss_ser::featuremap::{save_maps, FeatureMap, FeatureMapSpec};
use hpss_ser::hpss::HpssConfig;
use hpss_ser::synth::{sine, write_corpus};
use hpss_ser::EmotionLabel;
use ndarray::Array2;
use rand::Rng;

fn write_wav(path: &Path, samples: Vec<f64>, rate: u32) {
    let bytes = encode_wav_pcm16(&AudioBuffer::new(samples, rate).unwrap()).unwrap();
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn ingest_by_filename_rule() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["03a01Wa.wav", "16b10Tb.wav", "10a02Xc.wav"] {
        write_wav(&dir.path().join(name), vec![0.0; 100], 16000);
    }
    std::fs::create_dir(dir.path().join("sub")).unwrap();
    write_wav(&dir.path().join("sub/08a05Fd.WAV"), vec![0.0; 100], 16000);
    std::fs::write(dir.path().join("notes.txt"), "x").unwrap();

    let report = cmd_ingest(dir.path(), &Labeling::FilenameRule).unwrap();
    let rows = report.manifest.rows();
    assert_eq!(rows.len(), 3);
    assert_eq!(report.skipped.len(), 1);
    let find = |stem: &str| rows.iter().find(|r| r.path.to_string_lossy().contains(stem)).unwrap();
    assert_eq!(find("03a01Wa").label, EmotionLabel::Anger);
    assert_eq!(find("03a01Wa").speaker.as_deref(), Some("03"));
    assert_eq!(find("16b10Tb").label, EmotionLabel::Sadness);
    assert_eq!(find("08a05Fd").label, EmotionLabel::Happiness);
}

#[test]
fn ingest_from_manifest_csv() {
    let dir = tempfile::tempdir().unwrap();
    write_wav(&dir.path().join("a.wav"), vec![0.0; 10], 8000);
    let csv = dir.path().join("labels.csv");
    std::fs::write(&csv, "path,label,speaker\na.wav,fear,s1\nmissing.wav,anger,s2\n").unwrap();
    let report = cmd_ingest(dir.path(), &Labeling::Manifest(csv)).unwrap();
    assert_eq!(report.manifest.len(), 1);
    assert_eq!(report.manifest.rows()[0].label, EmotionLabel::Fear);
    assert_eq!(report.skipped.len(), 1);
}

#[test]
fn empty_directory_has_no_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        cmd_ingest(dir.path(), &Labeling::FilenameRule),
        Err(CliError::NoFilesFound)
    ));
}

#[test]
fn six_seconds_make_three_maps_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("clip.wav");
    write_wav(&wav, sine(330.0, 0.4, 6 * 22050, 22050), 22050);
    let manifest = DatasetManifest::new(vec![ManifestRow {
        path: wav,
        label: EmotionLabel::Boredom,
        speaker: None,
    }])
    .unwrap();
    let spec = FeatureMapSpec::default();
    let (a, b) = (dir.path().join("a.fmap"), dir.path().join("b.fmap"));
    let summary = cmd_extract(&manifest, &spec, &HpssConfig::default(), &a).unwrap();
    assert_eq!(summary.maps, 3);
    assert_eq!(summary.exit_code(), 0);
    cmd_extract(&manifest, &spec, &HpssConfig::default(), &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn unreadable_file_is_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.wav");
    let bad = dir.path().join("bad.wav");
    write_wav(&good, sine(200.0, 0.3, 4000, 8000), 8000);
    std::fs::write(&bad, b"RIFF....not a wave").unwrap();
    let manifest = DatasetManifest::new(vec![
        ManifestRow { path: good, label: EmotionLabel::Neutral, speaker: None },
        ManifestRow { path: bad.clone(), label: EmotionLabel::Neutral, speaker: None },
    ])
    .unwrap();
    let spec = FeatureMapSpec::new(16, 16, 8000, 256);
    let (maps, summary) = extract_maps(&manifest, &spec, &HpssConfig::default()).unwrap();
    assert_eq!(maps.len(), 1);
    assert_eq!(summary.failures.len(), 1);
    assert_eq!(summary.failures[0].0, bad);
    assert_eq!(summary.exit_code(), 1);
}

#[test]
fn rendered_gradient_has_expected_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let (bands, frames) = (4, 6);
    let ramp = Array2::from_shape_fn((bands, frames), |(_, n)| n as f32 / (frames - 1) as f32);
    let rows = Array2::from_shape_fn((bands, frames), |(b, _)| b as f32 / (bands - 1) as f32);
    let map = FeatureMap::new([ramp, rows], None, "g").unwrap();
    let maps_file = dir.path().join("g.fmap");
    save_maps(&[map], &maps_file).unwrap();
    let written = cmd_render(&maps_file, &dir.path().join("png"), Colormap::Grayscale).unwrap();
    assert_eq!(written.len(), 2);

    let decode = |p: &Path| {
        let dec = png::Decoder::new(std::io::BufReader::new(std::fs::File::open(p).unwrap()));
        let mut reader = dec.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        buf.truncate(info.buffer_size());
        (info.width, info.height, info.color_type, buf)
    };
    let (w, h, color, px) = decode(&written[0]);
    assert_eq!((w, h, color), (6, 4, png::ColorType::Grayscale));
    let expected_row: Vec<u8> = (0..6).map(|n| (n as f32 / 5.0 * 255.0).round() as u8).collect();
    for r in 0..4 {
        assert_eq!(&px[r * 6..(r + 1) * 6], &expected_row[..]);
    }
    let (_, _, _, px) = decode(&written[1]);
    // top image row is the highest band
    assert!(px[..6].iter().all(|&v| v == 255));
    assert!(px[18..].iter().all(|&v| v == 0));
    assert_eq!(px[6], 170);

    let heat = cmd_render(&maps_file, &dir.path().join("heat"), Colormap::Heat).unwrap();
    let (_, _, color, px) = decode(&heat[0]);
    assert_eq!(color, png::ColorType::Rgb);
    assert_eq!(&px[..3], &[0, 0, 0]);
    assert_eq!(&px[15..18], &[255, 255, 255]);
}

fn separable_embeddings(n_per_class: usize, classes: &[EmotionLabel], seed: u64) -> Vec<(EmbeddingVector, EmotionLabel)> {
    let mut r = common::rng(seed);
    let block = EMBEDDING_DIM / classes.len();
    let mut out = Vec::new();
    for _ in 0..n_per_class {
        for (c, &label) in classes.iter().enumerate() {
            let v = (0..EMBEDDING_DIM)
                .map(|j| r.random_range(0.0f32..0.3) + if j / block == c { 0.7 } else { 0.0 })
                .collect();
            out.push((EmbeddingVector::new(v).unwrap(), label));
        }
    }
    out
}

#[test]
fn train_and_eval_on_imported_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let classes = [EmotionLabel::Anger, EmotionLabel::Fear, EmotionLabel::Neutral, EmotionLabel::Sadness];
    let emb = dir.path().join("train.emb");
    std::fs::write(&emb, encode_embeddings(&separable_embeddings(15, &classes, 3))).unwrap();
    let cfg = TrainConfig {
        epochs: 12,
        batch_size: 16,
        learning_rate: 1e-3,
        seed: 5,
        ..TrainConfig::default()
    };
    let input = TrainInput::Embeddings(emb);
    let (a, b) = (dir.path().join("run_a"), dir.path().join("run_b"));
    let outcome = cmd_train(&input, &cfg, None, &a).unwrap();
    cmd_train(&input, &cfg, None, &b).unwrap();
    for f in ["model.mlpc", "report.csv", "report.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(outcome.report.total, outcome.split.test.len());
    assert!(outcome.report.accuracy > 0.9);

    let csv = std::fs::read_to_string(a.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
    assert!(csv.starts_with("Emotion,Anger,Boredom,Disgust,Fear,Happiness,Neutral,Sadness\n"));

    let report = cmd_eval(&a.join("model.mlpc"), &input).unwrap();
    assert_eq!(report.total, 60);
}

#[test]
fn wrong_embedding_width_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("narrow.emb");
    // EMB2 header declaring 1024-wide vectors, one record, valid checksum.
    let mut bytes = b"EMB2".to_vec();
    bytes.extend_from_slice(&1u16.to_le_bytes());
    bytes.extend_from_slice(&1024u32.to_le_bytes());
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.push(0);
    bytes.extend(std::iter::repeat_n(0u8, 1024 * 4));
    let crc = crc32fast::hash(&bytes);
    bytes.extend_from_slice(&crc.to_le_bytes());
    std::fs::write(&emb, bytes).unwrap();
    let err = cmd_train(&TrainInput::Embeddings(emb), &TrainConfig::default(), None, dir.path())
        .unwrap_err();
    assert!(err.to_string().contains("1024"), "{err}");
    assert!(!dir.path().join("model.mlpc").exists());
}

#[test]
fn sweep_rows_match_individual_training() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(dir.path(), 8, 1.0, 8000, 21).unwrap();
    let base = FeatureMapSpec::new(32, 16, 8000, 256);
    let cfg = TrainConfig {
        epochs: 6,
        batch_size: 16,
        learning_rate: 1e-3,
        seed: 2,
        ..TrainConfig::default()
    };
    let grid = [
        GridCell { bands: 32, frames: 16, sample_rate: 8000 },
        GridCell { bands: 16, frames: 8, sample_rate: 8000 },
    ];
    let rows = cmd_sweep(&manifest, &grid, &base, &HpssConfig::default(), &cfg).unwrap();
    let csv = sweep_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "Band,Frame,Sample rate,Accuracy");
    assert!(lines[1].starts_with("32,16,8000,") && lines[1].ends_with('%'));

    let maps_file = dir.path().join("cell.fmap");
    cmd_extract(&manifest, &base, &HpssConfig::default(), &maps_file).unwrap();
    let single = cmd_train(&TrainInput::Maps(maps_file), &cfg, Some(&manifest), &dir.path().join("t")).unwrap();
    assert_eq!(rows[0].accuracy.as_ref().unwrap(), &single.report.accuracy);
}

#[test]
fn failing_sweep_cell_becomes_error_row() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_corpus(dir.path(), 2, 0.5, 8000, 1).unwrap();
    let base = FeatureMapSpec::new(16, 8, 8000, 64);
    // 500 bands cannot fit a 64-point FFT
    let grid = [GridCell { bands: 500, frames: 8, sample_rate: 8000 }];
    let rows = cmd_sweep(&manifest, &grid, &base, &HpssConfig::default(), &TrainConfig::default()).unwrap();
    assert!(rows[0].accuracy.is_err());
    assert!(sweep_csv(&rows).lines().nth(1).unwrap().contains("error"));
}
