use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featuremap::{oversample, EmotionLabel, FeatureError};

use super::embed::EmbeddingVector;
use super::metrics::EvalReport;
use super::mlp::{MlpModel, Mode, ModelError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("class {0} has no examples")]
    MissingClass(EmotionLabel),
    #[error("the {0} partition is empty")]
    EmptyPartition(&'static str),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<FeatureError> for TrainError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::MissingClass(c) => TrainError::MissingClass(c),
            FeatureError::EmptyDataset => TrainError::EmptyDataset,
            other => TrainError::InvalidConfig(other.to_string()),
        }
    }
}

/// One labelled training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub embedding: EmbeddingVector,
    pub label: EmotionLabel,
    /// Speaker (or other grouping key) for group-disjoint splits.
    pub group: Option<String>,
}

impl Example {
    pub fn new(embedding: EmbeddingVector, label: EmotionLabel) -> Self {
        Self {
            embedding,
            label,
            group: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Train, validation, test fractions.
    pub split: [f64; 3],
    pub seed: u64,
    /// Classes that must be present; defaults to those observed in the data.
    pub classes: Option<Vec<EmotionLabel>>,
    /// Keep every group (speaker) inside a single partition.
    pub speaker_independent: bool,
    /// Evaluate the full training set without dropout after every epoch.
    pub record_train_metrics: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 128,
            epochs: 128,
            split: [0.8, 0.1, 0.1],
            seed: 0,
            classes: None,
            speaker_independent: false,
            record_train_metrics: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::InvalidConfig(m));
        if self.split.iter().any(|&f| !(f > 0.0)) {
            return bad(format!("split fractions {:?} must be positive", self.split));
        }
        if (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions {:?} must sum to 1", self.split));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be positive".into());
        }
        if !(self.learning_rate >= 0.0) {
            return bad("learning_rate must be non-negative".into());
        }
        Ok(())
    }
}

/// Index lists into the original dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle followed by a per-class (or per-group) partition.
pub fn split_dataset(data: &[Example], cfg: &TrainConfig) -> Result<Split, TrainError> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    order.shuffle(&mut rng);
    let [_, f_val, f_test] = cfg.split;

    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    if cfg.speaker_independent {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for &i in &order {
            groups.entry(data[i].group.as_deref().unwrap_or("")).or_default().push(i);
        }
        let mut keys: Vec<&str> = groups.keys().copied().collect();
        keys.shuffle(&mut rng);
        // Fill test, then validation, up to their target sizes; everything else trains.
        let n = data.len() as f64;
        let (target_test, target_val) = ((n * f_test).round() as usize, (n * f_val).round() as usize);
        for k in keys {
            let members = &groups[k];
            if split.test.len() < target_test {
                split.test.extend(members);
            } else if split.val.len() < target_val {
                split.val.extend(members);
            } else {
                split.train.extend(members);
            }
        }
    } else {
        let mut by_class: BTreeMap<EmotionLabel, Vec<usize>> = BTreeMap::new();
        for &i in &order {
            by_class.entry(data[i].label).or_default().push(i);
        }
        for members in by_class.values() {
            let n = members.len();
            let mut n_test = (n as f64 * f_test).round() as usize;
            let mut n_val = (n as f64 * f_val).round() as usize;
            while n_test + n_val >= n && n_test + n_val > 0 {
                if n_test >= n_val && n_test > 0 {
                    n_test -= 1;
                } else {
                    n_val -= 1;
                }
            }
            split.test.extend(&members[..n_test]);
            split.val.extend(&members[n_test..n_test + n_val]);
            split.train.extend(&members[n_test + n_val..]);
        }
    }
    for (name, part) in [("train", &split.train), ("validation", &split.val), ("test", &split.test)] {
        if part.is_empty() {
            return Err(TrainError::EmptyPartition(name));
        }
    }
    Ok(split)
}

/// Stacks embeddings into an `(examples, 2048)` matrix plus label ordinals.
pub fn to_matrix<'a, I>(examples: I) -> (Array2<f64>, Vec<usize>)
where
    I: IntoIterator<Item = &'a Example>,
{
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = 0;
    for ex in examples {
        width = ex.embedding.values().len();
        values.extend(ex.embedding.values().iter().map(|&v| v as f64));
        labels.push(ex.label.ordinal());
    }
    let rows = labels.len();
    (
        Array2::from_shape_vec((rows, width), values).expect("uniform width"),
        labels,
    )
}

/// Runs one shuffled pass of mini-batch ADAM updates; returns the mean batch loss.
pub fn train_epoch(
    model: &mut MlpModel,
    x: &Array2<f64>,
    labels: &[usize],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64, TrainError> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    let mut batches = 0;
    for chunk in order.chunks(cfg.batch_size) {
        let bx = x.select(Axis(0), chunk);
        let by: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
        let (loss, grads) = model.loss_and_gradients(bx.view(), &by, Mode::Train, rng)?;
        model.apply_adam(&grads, cfg.learning_rate);
        total += loss;
        batches += 1;
    }
    Ok(total / batches.max(1) as f64)
}

pub fn accuracy(model: &MlpModel, x: &Array2<f64>, labels: &[usize]) -> Result<f64, TrainError> {
    if labels.is_empty() {
        return Ok(0.0);
    }
    let pred = model.predict(x.view())?;
    let correct = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub batch_loss: f64,
    pub train_loss: Option<f64>,
    pub train_accuracy: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitHistory {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose snapshot was kept (highest validation accuracy, earliest on ties).
    pub best_epoch: usize,
}

/// Trains for `cfg.epochs` epochs. With a non-empty validation set the model
/// ends at the snapshot with the best validation accuracy.
pub fn fit(
    model: &mut MlpModel,
    train: &[Example],
    val: &[Example],
    cfg: &TrainConfig,
) -> Result<FitHistory, TrainError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptyPartition("train"));
    }
    let (tx, ty) = to_matrix(train);
    let (vx, vy) = to_matrix(val);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let mut best: Option<(f64, usize, MlpModel)> = None;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let batch_loss = train_epoch(model, &tx, &ty, cfg, &mut rng)?;
        let (train_loss, train_accuracy) = if cfg.record_train_metrics {
            (Some(model.loss(tx.view(), &ty)?), Some(accuracy(model, &tx, &ty)?))
        } else {
            (None, None)
        };
        let val_accuracy = if val.is_empty() {
            None
        } else {
            let acc = accuracy(model, &vx, &vy)?;
            if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                best = Some((acc, epoch, model.clone()));
            }
            Some(acc)
        };
        log::debug!("epoch {epoch}: loss {batch_loss:.5} val {val_accuracy:?}");
        epochs.push(EpochStats {
            epoch,
            batch_loss,
            train_loss,
            train_accuracy,
            val_accuracy,
        });
    }
    let best_epoch = match best {
        Some((_, epoch, snapshot)) => {
            *model = snapshot;
            epoch
        }
        None => cfg.epochs - 1,
    };
    Ok(FitHistory { epochs, best_epoch })
}

/// Arg-max predictions of `model` over `examples`, summarized.
pub fn evaluate(model: &MlpModel, examples: &[Example]) -> Result<EvalReport, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::EmptyPartition("test"));
    }
    let (x, y) = to_matrix(examples);
    let pred = model.predict(x.view())?;
    Ok(EvalReport::from_predictions(y.into_iter().zip(pred)))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    pub report: EvalReport,
    pub history: FitHistory,
    pub split: Split,
}

/// Full protocol: split, oversample the training partition, fit the
/// emotion classifier, and evaluate the best snapshot on the test partition.
pub fn train(data: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_model(MlpModel::emotion_classifier(cfg.seed), data, cfg)
}

/// [`train`] starting from a caller-supplied model.
pub fn train_model(
    mut model: MlpModel,
    data: &[Example],
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let present: BTreeSet<EmotionLabel> = data.iter().map(|e| e.label).collect();
    let classes: Vec<EmotionLabel> = match &cfg.classes {
        Some(c) => c.clone(),
        None => present.iter().copied().collect(),
    };
    if let Some(&c) = classes.iter().find(|c| !present.contains(c)) {
        return Err(TrainError::MissingClass(c));
    }

    let split = split_dataset(data, cfg)?;
    let tagged: Vec<(usize, EmotionLabel)> = split.train.iter().map(|&i| (i, data[i].label)).collect();
    let train_present: Vec<EmotionLabel> = tagged
        .iter()
        .map(|(_, l)| *l)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let balanced = oversample(&tagged, &train_present, cfg.seed.wrapping_add(1))?;
    let train_set: Vec<Example> = balanced.iter().map(|&(i, _)| data[i].clone()).collect();
    let val_set: Vec<Example> = split.val.iter().map(|&i| data[i].clone()).collect();
    let test_set: Vec<Example> = split.test.iter().map(|&i| data[i].clone()).collect();

    let history = fit(&mut model, &train_set, &val_set, cfg)?;
    let report = evaluate(&model, &test_set)?;
    Ok(TrainOutcome {
        model,
        report,
        history,
        split,
    })
}
