//! Finite-difference verification of backpropagated gradients.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::{Gradients, MlpModel, Mode, ModelError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    /// Parameters compared per weight or bias group; `None` checks all of them.
    pub samples_per_group: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            samples_per_group: Some(24),
            seed: 0,
        }
    }
}

fn param_mut(m: &mut MlpModel, layer: usize, is_bias: bool, idx: usize) -> &mut f64 {
    let layer = &mut m.layers_mut()[layer];
    if is_bias {
        &mut layer.bias.as_slice_mut().expect("contiguous")[idx]
    } else {
        &mut layer.weights.as_slice_mut().expect("contiguous")[idx]
    }
}

/// Relative error between analytic and numeric gradients, with a floor on
/// the denominator so that vanishing gradients compare absolutely.
fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / scale
}

pub fn gradient_check(
    model: &MlpModel,
    x: ArrayView2<f64>,
    labels: &[usize],
) -> Result<f64, ModelError> {
    gradient_check_with(model, x, labels, GradCheckOptions::default(), |_| {})
}

/// Maximum relative error over the checked parameters. `tamper` may edit the
/// analytic gradients before comparison.
pub fn gradient_check_with(
    model: &MlpModel,
    x: ArrayView2<f64>,
    labels: &[usize],
    opts: GradCheckOptions,
    tamper: impl FnOnce(&mut Gradients),
) -> Result<f64, ModelError> {
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    let (_, mut grads) = model.loss_and_gradients(x, labels, Mode::Eval, &mut unused)?;
    tamper(&mut grads);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for l in 0..model.layers().len() {
        for is_bias in [false, true] {
            let len = if is_bias {
                model.layers()[l].bias.len()
            } else {
                model.layers()[l].weights.len()
            };
            let picks: Vec<usize> = match opts.samples_per_group {
                Some(k) if k < len => sample(&mut rng, len, k).into_vec(),
                _ => (0..len).collect(),
            };
            for idx in picks {
                let base = *param_mut(&mut probe, l, is_bias, idx);
                *param_mut(&mut probe, l, is_bias, idx) = base + opts.step;
                let plus = probe.loss(x, labels)?;
                *param_mut(&mut probe, l, is_bias, idx) = base - opts.step;
                let minus = probe.loss(x, labels)?;
                *param_mut(&mut probe, l, is_bias, idx) = base;
                let numeric = (plus - minus) / (2.0 * opts.step);
                let g = &grads.layers[l];
                let analytic = if is_bias {
                    g.bias[idx]
                } else {
                    g.weights.as_slice().unwrap()[idx]
                };
                worst = worst.max(relative_error(analytic, numeric));
            }
        }
    }
    Ok(worst)
}
