//! Network structure, forward pass and backpropagation.

use super::MlpConfig;
use crate::error::{Error, Result};
use crate::rng;
use ndarray::{Array1, Array2, ArrayView2, Axis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
}

impl Activation {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Activation::Relu),
            other => Err(Error::ModelLoad(format!("unknown activation tag {other}"))),
        }
    }
}

/// One affine layer; `weights` is `[out x in]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Dense stack ending in a single linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    config: MlpConfig,
    layers: Vec<Layer>,
}

impl Mlp {
    /// He-style init: weights from N(0, 2 / fan_in), biases zero,
    /// deterministic in `config.init_seed`.
    pub fn init(config: &MlpConfig) -> Result<Self> {
        config.validate()?;
        let mut dims = Vec::with_capacity(config.hidden_layers + 2);
        dims.push(config.input_width);
        dims.extend(std::iter::repeat(config.hidden_width).take(config.hidden_layers));
        dims.push(1);

        let mut rng = rng::seeded(config.init_seed);
        let layers = dims
            .windows(2)
            .map(|d| {
                let (fan_in, fan_out) = (d[0], d[1]);
                let std = (2.0 / fan_in as f64).sqrt();
                let weights = Array2::from_shape_fn((fan_out, fan_in), |_| {
                    std * rng::standard_normal(&mut rng)
                });
                Layer { weights, bias: Array1::zeros(fan_out) }
            })
            .collect();
        Ok(Mlp { config: *config, layers })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn from_parts(config: MlpConfig, layers: Vec<Layer>) -> Result<Self> {
        config.validate()?;
        let mut expect_in = config.input_width;
        for (i, layer) in layers.iter().enumerate() {
            let (rows, cols) = layer.weights.dim();
            if cols != expect_in || layer.bias.len() != rows {
                return Err(Error::ModelLoad(format!(
                    "layer {i} has shape {rows}x{cols}, expected input {expect_in}"
                )));
            }
            expect_in = rows;
        }
        if expect_in != 1 || layers.len() != config.hidden_layers + 1 {
            return Err(Error::ModelLoad("layer stack does not match config".into()));
        }
        Ok(Mlp { config, layers })
    }

    /// Mutable layer access, for the optimizer and for hand-built
    /// networks in tests. Shapes must stay consistent.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Scalar prediction for one feature row. The output is linear and may
    /// be negative; the digit search depends on that.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.config.input_width {
            return Err(Error::invalid(format!(
                "input has {} values, model expects {}",
                x.len(),
                self.config.input_width
            )));
        }
        let mut a = Array1::from_iter(x.iter().copied());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weights.dot(&a) + &layer.bias;
            if i + 1 < self.layers.len() {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        Ok(a[0])
    }

    /// Predictions for a batch, one row per sample.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.config.input_width {
            return Err(Error::invalid(format!(
                "batch has {} columns, model expects {}",
                x.ncols(),
                self.config.input_width
            )));
        }
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights.t()) + &layer.bias;
            if i + 1 < self.layers.len() {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        Ok(a.index_axis(Axis(1), 0).to_owned())
    }
}

/// Mean squared error.
pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != targets.len() {
        return Err(Error::invalid(format!(
            "mse needs equal nonzero lengths, got {} and {}",
            predictions.len(),
            targets.len()
        )));
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Per-parameter gradients, same shapes as the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Gradients {
            layers: mlp
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.weights.dim()), Array1::zeros(l.bias.len())))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            *w += ow;
            *b += ob;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (w, b) in self.layers.iter_mut() {
            w.mapv_inplace(|v| v * factor);
            b.mapv_inplace(|v| v * factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|(w, b)| w.iter().all(|v| v.is_finite()) && b.iter().all(|v| v.is_finite()))
    }
}

/// Exact gradient of the batch-mean squared error with respect to every
/// parameter. Also returns the batch's summed squared error.
pub fn backward(
    mlp: &Mlp,
    batch_x: ArrayView2<'_, f64>,
    batch_y: &[f64],
) -> Result<(Gradients, f64)> {
    let rows = batch_x.nrows();
    if rows == 0 || rows != batch_y.len() {
        return Err(Error::invalid(format!(
            "backward needs matching nonzero batch shapes, got {rows} rows and {} targets",
            batch_y.len()
        )));
    }
    if batch_x.ncols() != mlp.config.input_width {
        return Err(Error::invalid(format!(
            "batch has {} columns, model expects {}",
            batch_x.ncols(),
            mlp.config.input_width
        )));
    }

    let n_layers = mlp.layers.len();
    // post-activation outputs per layer; activations[0] is the input
    let mut activations: Vec<Array2<f64>> = Vec::with_capacity(n_layers + 1);
    activations.push(batch_x.to_owned());
    for (i, layer) in mlp.layers.iter().enumerate() {
        let mut z = activations[i].dot(&layer.weights.t()) + &layer.bias;
        if i + 1 < n_layers {
            z.mapv_inplace(|v| v.max(0.0));
        }
        activations.push(z);
    }

    let pred = activations[n_layers].index_axis(Axis(1), 0);
    let mut sse = 0.0;
    let mut delta = Array2::zeros((rows, 1));
    for r in 0..rows {
        let err = pred[r] - batch_y[r];
        sse += err * err;
        delta[(r, 0)] = 2.0 * err / rows as f64;
    }

    let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(n_layers);
    for l in (0..n_layers).rev() {
        let grad_w = delta.t().dot(&activations[l]);
        let grad_b = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut upstream = delta.dot(&mlp.layers[l].weights);
            // rectifier gate: activations[l] is post-relu, zero means blocked
            upstream.zip_mut_with(&activations[l], |u, &a| {
                if a <= 0.0 {
                    *u = 0.0;
                }
            });
            delta = upstream;
        }
        grads.push((grad_w, grad_b));
    }
    grads.reverse();
    Ok((Gradients { layers: grads }, sse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny_config(input: usize, hidden: usize, width: usize) -> MlpConfig {
        MlpConfig {
            input_width: input,
            hidden_layers: hidden,
            hidden_width: width,
            activation: Activation::Relu,
            init_seed: 7,
        }
    }

    #[test]
    fn init_shapes() {
        let linear = Mlp::init(&tiny_config(42, 0, 200)).unwrap();
        assert_eq!(linear.layers().len(), 1);
        assert_eq!(linear.layers()[0].weights.dim(), (1, 42));

        let deep = Mlp::init(&MlpConfig::standard(5, 1)).unwrap();
        let dims: Vec<(usize, usize)> = deep.layers().iter().map(|l| l.weights.dim()).collect();
        assert_eq!(dims, vec![(200, 42), (200, 200), (200, 200), (200, 200), (200, 200), (1, 200)]);
        assert!(deep.layers().iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = Mlp::init(&tiny_config(8, 2, 16)).unwrap();
        let b = Mlp::init(&tiny_config(8, 2, 16)).unwrap();
        assert_eq!(a, b);
        let c = Mlp::init(&MlpConfig { init_seed: 8, ..tiny_config(8, 2, 16) }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_rejects_zero_widths() {
        assert!(Mlp::init(&tiny_config(0, 0, 1)).is_err());
        assert!(Mlp::init(&tiny_config(4, 2, 0)).is_err());
    }

    #[test]
    fn forward_linear_case() {
        let mut mlp = Mlp::init(&tiny_config(3, 0, 1)).unwrap();
        mlp.layers_mut()[0].weights = array![[1.0, 2.0, 3.0]];
        mlp.layers_mut()[0].bias = array![0.5];
        assert_eq!(mlp.forward(&[1.0, 1.0, 1.0]).unwrap(), 6.5);
    }

    #[test]
    fn forward_zero_weights_returns_bias() {
        let mut mlp = Mlp::init(&tiny_config(4, 1, 3)).unwrap();
        for layer in mlp.layers_mut() {
            layer.weights.fill(0.0);
            layer.bias.fill(0.0);
        }
        mlp.layers_mut()[1].bias[0] = -2.5;
        assert_eq!(mlp.forward(&[9.0, -3.0, 0.0, 1.0]).unwrap(), -2.5);
    }

    #[test]
    fn forward_hand_built_relu_unit() {
        // single hidden unit computing relu(x0), output passes it through
        let mut mlp = Mlp::init(&tiny_config(1, 1, 1)).unwrap();
        mlp.layers_mut()[0].weights = array![[1.0]];
        mlp.layers_mut()[0].bias = array![0.0];
        mlp.layers_mut()[1].weights = array![[1.0]];
        mlp.layers_mut()[1].bias = array![0.0];
        assert_eq!(mlp.forward(&[-1.0]).unwrap(), 0.0);
        assert_eq!(mlp.forward(&[0.0]).unwrap(), 0.0);
        assert_eq!(mlp.forward(&[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn forward_batch_matches_single() {
        let mlp = Mlp::init(&tiny_config(6, 3, 10)).unwrap();
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|r| (0..6).map(|c| ((r * 6 + c) as f64).sin()).collect())
            .collect();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let batch = Array2::from_shape_vec((5, 6), flat).unwrap();
        let out = mlp.forward_batch(batch.view()).unwrap();
        for (r, row) in rows.iter().enumerate() {
            assert!((out[r] - mlp.forward(row).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let mlp = Mlp::init(&tiny_config(4, 0, 1)).unwrap();
        assert!(mlp.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0], &[3.0]).unwrap(), 9.0);
        assert!((mse(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn backward_linear_single_sample_matches_calculus() {
        // loss = (w.x + b - y)^2, gradient = 2(w.x + b - y) * (x, 1)
        let mut mlp = Mlp::init(&tiny_config(2, 0, 1)).unwrap();
        mlp.layers_mut()[0].weights = array![[0.5, -1.0]];
        mlp.layers_mut()[0].bias = array![0.25];
        let x = array![[2.0, 3.0]];
        let y = [1.0];
        let (grads, sse) = backward(&mlp, x.view(), &y).unwrap();
        let err = 0.5 * 2.0 - 1.0 * 3.0 + 0.25 - 1.0; // -2.75
        assert!((sse - err * err).abs() < 1e-12);
        assert!((grads.layers[0].0[(0, 0)] - 2.0 * err * 2.0).abs() < 1e-12);
        assert!((grads.layers[0].0[(0, 1)] - 2.0 * err * 3.0).abs() < 1e-12);
        assert!((grads.layers[0].1[0] - 2.0 * err).abs() < 1e-12);
    }

    #[test]
    fn backward_zero_error_gives_zero_output_bias_gradient() {
        let mut mlp = Mlp::init(&tiny_config(2, 1, 4)).unwrap();
        for layer in mlp.layers_mut() {
            layer.weights.fill(0.0);
            layer.bias.fill(0.0);
        }
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let y = [0.0, 0.0];
        let (grads, sse) = backward(&mlp, x.view(), &y).unwrap();
        assert_eq!(sse, 0.0);
        let (_, out_bias) = grads.layers.last().unwrap();
        assert_eq!(out_bias[0], 0.0);
    }

    #[test]
    fn backward_matches_central_finite_differences() {
        // randomized small networks, every parameter checked
        for (seed, hidden, width) in [(1u64, 1usize, 6usize), (2, 2, 5), (3, 3, 4)] {
            let config = MlpConfig {
                input_width: 5,
                hidden_layers: hidden,
                hidden_width: width,
                activation: Activation::Relu,
                init_seed: seed,
            };
            let mlp = Mlp::init(&config).unwrap();
            let mut rng = crate::rng::seeded(seed + 100);
            let x = Array2::from_shape_fn((8, 5), |_| crate::rng::standard_normal(&mut rng));
            let y: Vec<f64> = (0..8).map(|_| crate::rng::standard_normal(&mut rng)).collect();
            let (grads, _) = backward(&mlp, x.view(), &y).unwrap();

            let loss = |m: &Mlp| {
                let pred = m.forward_batch(x.view()).unwrap();
                mse(pred.as_slice().unwrap(), &y).unwrap()
            };
            let h = 1e-5;
            for l in 0..mlp.layers().len() {
                let (rows, cols) = mlp.layers()[l].weights.dim();
                for r in 0..rows {
                    for c in 0..cols {
                        let mut plus = mlp.clone();
                        plus.layers_mut()[l].weights[(r, c)] += h;
                        let mut minus = mlp.clone();
                        minus.layers_mut()[l].weights[(r, c)] -= h;
                        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                        let analytic = grads.layers[l].0[(r, c)];
                        let denom = numeric.abs().max(analytic.abs()).max(1e-6);
                        assert!(
                            ((numeric - analytic) / denom).abs() < 1e-4,
                            "seed {seed} layer {l} w[{r},{c}]: {numeric} vs {analytic}"
                        );
                    }
                }
            }
        }
    }
}
