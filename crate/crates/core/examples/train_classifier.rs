//! Trains the emotion classifier on pooled embeddings, checkpoints it and
//! evaluates the restored model.
//!
//! With an EMB2 file argument the embeddings come from disk; otherwise a
//! synthetic set of seven Gaussian clusters is used.
//!
//! ```text
//! cargo run --release --example train_classifier -- [embeddings.emb2]
//! ```

use hpss_ser::classifier::{
    evaluate, gradient_check, import_embeddings, to_matrix, train, EmbeddingVector, Example,
    MlpModel, TrainConfig, EMBEDDING_DIM,
};
use hpss_ser::EmotionLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn clusters(per_class: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f32>> = (0..7)
        .map(|_| (0..EMBEDDING_DIM).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let mut out = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per_class {
            let v = c.iter().map(|x| x + rng.random_range(-0.3..0.3)).collect();
            out.push(Example::new(EmbeddingVector::new(v).unwrap(), EmotionLabel::from_ordinal(k).unwrap()));
        }
    }
    out
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = match std::env::args().nth(1) {
        Some(path) => import_embeddings(path)?
            .into_iter()
            .map(|(e, l)| Example::new(e, l))
            .collect(),
        None => clusters(30, 5),
    };
    println!("{} examples", data.len());

    let probe = MlpModel::emotion_classifier(1);
    let (x, labels) = to_matrix(&data[..4]);
    println!(
        "{} parameters; gradient check max relative error {:.2e}",
        probe.parameter_count(),
        gradient_check(&probe, x.view(), &labels)?
    );

    let cfg = TrainConfig { epochs: 40, learning_rate: 1e-3, seed: 1, ..TrainConfig::default() };
    let outcome = train(&data, &cfg)?;
    println!(
        "best validation accuracy {:.2}% at epoch {}",
        100.0 * outcome.history.epochs[outcome.history.best_epoch - 1].val_accuracy.unwrap_or(0.0),
        outcome.history.best_epoch
    );

    let path = std::env::temp_dir().join("hpss-ser-example.mlpc");
    std::fs::write(&path, outcome.model.to_bytes())?;
    let restored = MlpModel::from_bytes(&std::fs::read(&path)?)?;
    let report = evaluate(&restored, &outcome.split.test.iter().map(|&i| data[i].clone()).collect::<Vec<_>>())?;
    assert_eq!(report, outcome.report);
    print!("{}", report.confusion_table());
    Ok(())
}
