//! Adam update with bias correction.

use super::mlp::{Gradients, Mlp};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};

/// Per-parameter moment estimates plus the optimizer hyperparameters.
/// Defaults follow the optimizer's published recommendation: lr 0.001,
/// beta1 0.9, beta2 0.999, epsilon 1e-8.
#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Vec<(Array2<f64>, Array1<f64>)>,
    second_moment: Vec<(Array2<f64>, Array1<f64>)>,
    step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(mlp: &Mlp, learning_rate: f64) -> Self {
        let zeros = || {
            mlp.layers()
                .iter()
                .map(|l| (Array2::zeros(l.weights.dim()), Array1::zeros(l.bias.len())))
                .collect::<Vec<_>>()
        };
        AdamState {
            first_moment: zeros(),
            second_moment: zeros(),
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// One optimizer step: update moments, apply the bias-corrected update.
pub fn adam_step(mlp: &mut Mlp, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if grads.layers.len() != mlp.layers().len() {
        return Err(Error::invalid("gradient shape does not match model"));
    }
    if !grads.is_finite() {
        return Err(Error::TrainingDiverged { epoch: 0 });
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.learning_rate, state.epsilon);

    for (l, layer) in mlp.layers_mut().iter_mut().enumerate() {
        let (gw, gb) = &grads.layers[l];
        let (mw, mb) = &mut state.first_moment[l];
        let (vw, vb) = &mut state.second_moment[l];

        mw.zip_mut_with(gw, |m, &g| *m = b1 * *m + (1.0 - b1) * g);
        vw.zip_mut_with(gw, |v, &g| *v = b2 * *v + (1.0 - b2) * g * g);
        ndarray::Zip::from(&mut layer.weights)
            .and(&*mw)
            .and(&*vw)
            .for_each(|w, &m, &v| *w -= lr * (m / c1) / ((v / c2).sqrt() + eps));

        mb.zip_mut_with(gb, |m, &g| *m = b1 * *m + (1.0 - b1) * g);
        vb.zip_mut_with(gb, |v, &g| *v = b2 * *v + (1.0 - b2) * g * g);
        ndarray::Zip::from(&mut layer.bias)
            .and(&*mb)
            .and(&*vb)
            .for_each(|w, &m, &v| *w -= lr * (m / c1) / ((v / c2).sqrt() + eps));
    }
    Ok(())
}
