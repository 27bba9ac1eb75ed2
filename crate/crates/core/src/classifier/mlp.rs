use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binio::{FormatError, Reader, Writer};

/// Input width of the classifier.
pub const EMBEDDING_DIM: usize = 2048;
/// Number of output classes.
pub const NUM_CLASSES: usize = 7;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("input has width {found}, model expects {expected}")]
    InputWidth { found: usize, expected: usize },
    #[error("label {label} outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    /// Linear hidden layers; used to test dropout scaling in isolation.
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Identity => 1,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Identity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Fully connected layer; `weights` is `(inputs, outputs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Per-parameter gradients (or ADAM moments), aligned with the model layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl Gradients {
    fn zeros_like(layers: &[DenseLayer]) -> Self {
        Self {
            layers: layers
                .iter()
                .map(|l| DenseLayer {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Gradients,
    pub second_moment: Gradients,
    pub step: u64,
}

/// Multilayer perceptron with dropout after every hidden layer and a
/// softmax output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
    dropout: Vec<f64>,
    activation: Activation,
    adam: AdamState,
    seed: u64,
}

/// Activations kept from a forward pass for backpropagation.
struct Trace {
    /// Input to each layer (after dropout for hidden layers).
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of hidden layers.
    pre: Vec<Array2<f64>>,
    /// Dropout multipliers (0 or `1/(1-rate)`) per hidden layer.
    masks: Vec<Option<Array2<f64>>>,
    probs: Array2<f64>,
}

impl MlpModel {
    /// Layer sizes `[2048, 1024, 1024, 512, 512, 7]`, dropout `[0.5, 0.5, 0.3, 0.3]`.
    pub fn emotion_classifier(seed: u64) -> Self {
        Self::new(
            &[EMBEDDING_DIM, 1024, 1024, 512, 512, NUM_CLASSES],
            &[0.5, 0.5, 0.3, 0.3],
            Activation::Relu,
            seed,
        )
        .expect("fixed architecture is valid")
    }

    /// Uniform fan-in initialization, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero biases.
    pub fn new(
        sizes: &[usize],
        dropout: &[f64],
        activation: Activation,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(ModelError::InvalidArchitecture(format!(
                "layer sizes {sizes:?}"
            )));
        }
        if dropout.len() != sizes.len() - 2 {
            return Err(ModelError::InvalidArchitecture(format!(
                "{} dropout rates for {} hidden layers",
                dropout.len(),
                sizes.len() - 2
            )));
        }
        if dropout.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(ModelError::InvalidArchitecture(format!(
                "dropout rates {dropout:?} must be in [0, 1)"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers: Vec<DenseLayer> = sizes
            .windows(2)
            .map(|w| {
                let bound = (6.0 / w[0] as f64).sqrt();
                DenseLayer {
                    weights: Array2::from_shape_simple_fn((w[0], w[1]), || {
                        rng.random_range(-bound..bound)
                    }),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        let adam = AdamState {
            first_moment: Gradients::zeros_like(&layers),
            second_moment: Gradients::zeros_like(&layers),
            step: 0,
        };
        Ok(Self {
            layers,
            dropout: dropout.to_vec(),
            activation,
            adam,
            seed,
        })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].weights.nrows()];
        sizes.extend(self.layers.iter().map(|l| l.weights.ncols()));
        sizes
    }

    pub fn dropout_rates(&self) -> &[f64] {
        &self.dropout
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn num_outputs(&self) -> usize {
        self.layers.last().unwrap().weights.ncols()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<(), ModelError> {
        if x.ncols() != self.input_dim() {
            return Err(ModelError::InputWidth {
                found: x.ncols(),
                expected: self.input_dim(),
            });
        }
        Ok(())
    }

    fn run<R: Rng + ?Sized>(&self, x: ArrayView2<f64>, mode: Mode, rng: &mut R) -> Trace {
        let hidden = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(hidden);
        let mut masks = Vec::with_capacity(hidden);
        let mut h = x.to_owned();
        for (l, layer) in self.layers[..hidden].iter().enumerate() {
            let z = h.dot(&layer.weights) + &layer.bias;
            let mut a = z.mapv(|v| self.activation.apply(v));
            let rate = self.dropout[l];
            let mask = if mode == Mode::Train && rate > 0.0 {
                let keep = 1.0 / (1.0 - rate);
                let m = Array2::from_shape_simple_fn(a.raw_dim(), || {
                    if rng.random::<f64>() < rate {
                        0.0
                    } else {
                        keep
                    }
                });
                a *= &m;
                Some(m)
            } else {
                None
            };
            inputs.push(std::mem::replace(&mut h, a));
            pre.push(z);
            masks.push(mask);
        }
        let out = self.layers.last().unwrap();
        let logits = h.dot(&out.weights) + &out.bias;
        inputs.push(h);
        Trace {
            inputs,
            pre,
            masks,
            probs: softmax_rows(&logits),
        }
    }

    /// Class probabilities for a batch of row vectors.
    pub fn forward_batch<R: Rng + ?Sized>(
        &self,
        x: ArrayView2<f64>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Array2<f64>, ModelError> {
        self.check_input(&x)?;
        Ok(self.run(x, mode, rng).probs)
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        mode: Mode,
        rng: &mut R,
    ) -> Result<Vec<f64>, ModelError> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        Ok(self.forward_batch(view, mode, rng)?.into_raw_vec_and_offset().0)
    }

    /// Eval-mode probabilities (no dropout, no randomness).
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, ModelError> {
        self.check_input(&x)?;
        // eval mode never draws from the generator
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        Ok(self.run(x, Mode::Eval, &mut unused).probs)
    }

    /// Arg-max class per row, ties broken toward the lowest index.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>, ModelError> {
        Ok(self.predict_proba(x)?.rows().into_iter().map(|r| argmax(r.as_slice().unwrap())).collect())
    }

    fn check_labels(&self, labels: &[usize]) -> Result<(), ModelError> {
        let classes = self.num_outputs();
        match labels.iter().find(|&&l| l >= classes) {
            Some(&label) => Err(ModelError::LabelOutOfRange { label, classes }),
            None => Ok(()),
        }
    }

    /// Mean cross-entropy of the batch in eval mode.
    pub fn loss(&self, x: ArrayView2<f64>, labels: &[usize]) -> Result<f64, ModelError> {
        self.check_labels(labels)?;
        let probs = self.predict_proba(x)?;
        Ok(cross_entropy(&probs, labels))
    }

    /// Mean cross-entropy loss and its gradient with respect to every parameter.
    pub fn loss_and_gradients<R: Rng + ?Sized>(
        &self,
        x: ArrayView2<f64>,
        labels: &[usize],
        mode: Mode,
        rng: &mut R,
    ) -> Result<(f64, Gradients), ModelError> {
        self.check_input(&x)?;
        self.check_labels(labels)?;
        let trace = self.run(x, mode, rng);
        let loss = cross_entropy(&trace.probs, labels);
        let batch = labels.len() as f64;

        let mut delta = trace.probs;
        for (row, &y) in delta.rows_mut().into_iter().zip(labels) {
            let mut row = row;
            row[y] -= 1.0;
        }
        delta /= batch;

        let mut grads = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let gw = trace.inputs[l].t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].weights.t());
                let act = self.activation;
                Zip::from(&mut back)
                    .and(&trace.pre[l - 1])
                    .for_each(|d, &z| *d *= act.derivative(z));
                if let Some(mask) = &trace.masks[l - 1] {
                    back *= mask;
                }
                delta = back;
            }
            grads.push(DenseLayer {
                weights: gw,
                bias: gb,
            });
        }
        grads.reverse();
        Ok((loss, Gradients { layers: grads }))
    }

    /// One ADAM update.
    pub fn apply_adam(&mut self, grads: &Gradients, learning_rate: f64) {
        self.adam.step += 1;
        let t = self.adam.step as i32;
        let bias1 = 1.0 - ADAM_BETA1.powi(t);
        let bias2 = 1.0 - ADAM_BETA2.powi(t);
        let update = |param: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *param -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        };
        let adam = &mut self.adam;
        for (((layer, g), m), v) in self
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut adam.first_moment.layers)
            .zip(&mut adam.second_moment.layers)
        {
            Zip::from(&mut layer.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .and(&g.weights)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }

    /// Serializes to the `MLPC` checkpoint format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(CHECKPOINT_MAGIC, CHECKPOINT_VERSION);
        w.u8(self.activation.code());
        let sizes = self.layer_sizes();
        w.u32(sizes.len() as u32);
        for s in &sizes {
            w.u32(*s as u32);
        }
        for r in &self.dropout {
            w.f64(*r);
        }
        let put = |w: &mut Writer, layers: &[DenseLayer]| {
            for l in layers {
                l.weights.iter().for_each(|v| w.f64(*v));
                l.bias.iter().for_each(|v| w.f64(*v));
            }
        };
        put(&mut w, &self.layers);
        w.u64(self.adam.step);
        put(&mut w, &self.adam.first_moment.layers);
        put(&mut w, &self.adam.second_moment.layers);
        w.u64(self.seed);
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, ModelError> {
        let mut r = Reader::open(data, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
        let corrupt = |m: String| ModelError::Format(FormatError::CorruptFile(m));
        let activation = Activation::from_code(r.u8()?)
            .ok_or_else(|| corrupt("unknown activation".into()))?;
        let n = r.u32()? as usize;
        if !(2..=64).contains(&n) {
            return Err(corrupt(format!("{n} layer sizes")));
        }
        let sizes = (0..n)
            .map(|_| r.u32().map(|v| v as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let params: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if r.remaining() < params * 8 * 3 {
            return Err(corrupt("truncated parameters".into()));
        }
        let dropout = (0..n - 2).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let get = |r: &mut Reader| -> Result<Vec<DenseLayer>, FormatError> {
            sizes
                .windows(2)
                .map(|w| {
                    let wv = (0..w[0] * w[1]).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
                    let bv = (0..w[1]).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
                    Ok(DenseLayer {
                        weights: Array2::from_shape_vec((w[0], w[1]), wv).unwrap(),
                        bias: Array1::from_vec(bv),
                    })
                })
                .collect()
        };
        let layers = get(&mut r)?;
        let step = r.u64()?;
        let first = get(&mut r)?;
        let second = get(&mut r)?;
        let seed = r.u64()?;
        r.finish()?;
        let mut model = MlpModel::new(&sizes, &dropout, activation, seed)?;
        model.layers = layers;
        model.adam = AdamState {
            first_moment: Gradients { layers: first },
            second_moment: Gradients { layers: second },
            step,
        };
        Ok(model)
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"MLPC";
const CHECKPOINT_VERSION: u16 = 1;

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

fn cross_entropy(probs: &Array2<f64>, labels: &[usize]) -> f64 {
    let total: f64 = probs
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(row, &y)| -row[y].max(f64::MIN_POSITIVE).ln())
        .sum();
    total / labels.len().max(1) as f64
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
