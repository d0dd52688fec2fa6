//! Minibatch training with best-validation snapshotting.
//!
//! Each batch is processed in fixed 256-row chunks whose partial gradients
//! are summed in chunk order. The chunking is identical in the parallel
//! and sequential builds, so a (init_seed, shuffle_seed) pair reproduces
//! the exact same weights everywhere.

use super::adam::{adam_step, AdamState};
use super::mlp::{backward, Gradients, Mlp};
use super::{MlpConfig, TrainConfig};
use crate::dataset::DataSplit;
use crate::error::{Error, Result};
use crate::features::{make_features, FeatureMask};
use crate::par;
use crate::partitions::CometTable;
use crate::rng;
use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Rows per gradient chunk; fixes the float accumulation order.
const GRAD_CHUNK: usize = 256;
/// Rows per inference chunk when scoring a full set.
const EVAL_CHUNK: usize = 8192;

/// Materialized feature matrices for the train and validation sets.
pub struct TrainData {
    pub train_x: Array2<f64>,
    pub train_y: Array1<f64>,
    pub validation_x: Array2<f64>,
    pub validation_y: Array1<f64>,
}

fn feature_matrix(
    table: &CometTable,
    indices: &[usize],
    mask: &FeatureMask,
    n_max: u64,
) -> Result<(Array2<f64>, Array1<f64>)> {
    mask.validate()?;
    let width = mask.width();
    let records = table.records();
    let mut x = Array2::zeros((indices.len(), width));
    let mut y = Array1::zeros(indices.len());
    for (row, &i) in indices.iter().enumerate() {
        let rec = records[i];
        let features = mask.apply(&make_features(rec.n, n_max)?)?;
        x.row_mut(row).assign(&Array1::from(features));
        y[row] = rec.g as f64;
    }
    Ok((x, y))
}

impl TrainData {
    /// Build masked feature matrices for a table's train/validation indices.
    pub fn from_table(
        table: &CometTable,
        split: &DataSplit,
        mask: &FeatureMask,
        n_max: u64,
    ) -> Result<Self> {
        if split.train.is_empty() || split.validation.is_empty() {
            return Err(Error::invalid("train and validation sets must be nonempty"));
        }
        let (train_x, train_y) = feature_matrix(table, &split.train, mask, n_max)?;
        let (validation_x, validation_y) =
            feature_matrix(table, &split.validation, mask, n_max)?;
        Ok(TrainData { train_x, train_y, validation_x, validation_y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub per_epoch: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_validation_mse: f64,
}

impl TrainReport {
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "epoch,train_mse,validation_mse")?;
        for e in &self.per_epoch {
            writeln!(w, "{},{},{}", e.epoch, e.train_mse, e.validation_mse)?;
        }
        Ok(())
    }
}

/// Sum of squared errors over a set, chunked for parallelism with a
/// deterministic combine.
pub(crate) fn sum_squared_error(mlp: &Mlp, x: ArrayView2<'_, f64>, y: &Array1<f64>) -> f64 {
    let partials = par::map_chunks(x.nrows(), EVAL_CHUNK, |range| {
        let pred = mlp
            .forward_batch(x.slice(ndarray::s![range.clone(), ..]))
            .expect("width checked by caller");
        pred.iter()
            .zip(y.slice(ndarray::s![range]))
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
    });
    partials.into_iter().sum()
}

/// Batch-mean gradients computed over fixed-size row chunks.
fn batch_gradients(
    mlp: &Mlp,
    batch_x: &Array2<f64>,
    batch_y: &Array1<f64>,
) -> Result<(Gradients, f64)> {
    let rows = batch_x.nrows();
    let chunks = par::map_chunks(rows, GRAD_CHUNK, |range| {
        let x = batch_x.slice(ndarray::s![range.clone(), ..]);
        let y = batch_y.slice(ndarray::s![range.clone()]);
        // chunk gradients are means over the chunk; reweight to sums
        backward(mlp, x, y.as_slice().unwrap()).map(|(mut g, sse)| {
            g.scale(range.len() as f64);
            (g, sse)
        })
    });
    let mut total = Gradients::zeros_like(mlp);
    let mut sse = 0.0;
    for chunk in chunks {
        let (g, s) = chunk?;
        total.add_assign(&g);
        sse += s;
    }
    total.scale(1.0 / rows as f64);
    Ok((total, sse))
}

/// Run the full optimization and return the weights snapshotted at the
/// epoch with minimum validation error, together with the epoch log.
/// `train_mse` in the log is the running mean of minibatch losses.
pub fn train(
    config: &MlpConfig,
    tcfg: &TrainConfig,
    data: &TrainData,
) -> Result<(Mlp, TrainReport)> {
    config.validate()?;
    tcfg.validate()?;
    if data.train_x.nrows() == 0 || data.validation_x.nrows() == 0 {
        return Err(Error::invalid("train and validation sets must be nonempty"));
    }
    if data.train_x.ncols() != config.input_width {
        return Err(Error::invalid(format!(
            "data has {} features, config expects {}",
            data.train_x.ncols(),
            config.input_width
        )));
    }

    let mut mlp = Mlp::init(config)?;
    let mut state = AdamState::new(&mlp, 0.001);
    let mut shuffle_rng = rng::seeded(tcfg.shuffle_seed);
    let n = data.train_x.nrows();
    let mut order: Vec<usize> = (0..n).collect();

    let mut per_epoch = Vec::with_capacity(tcfg.max_epochs);
    let mut best: Option<(f64, usize, Mlp)> = None;
    let mut batch_x = Array2::zeros((tcfg.batch_size.min(n), config.input_width));
    let mut batch_y = Array1::zeros(tcfg.batch_size.min(n));

    for epoch in 1..=tcfg.max_epochs {
        rng::shuffle(&mut order, &mut shuffle_rng);
        let mut epoch_sse = 0.0;
        for batch_idx in order.chunks(tcfg.batch_size) {
            let rows = batch_idx.len();
            for (r, &i) in batch_idx.iter().enumerate() {
                batch_x.row_mut(r).assign(&data.train_x.index_axis(Axis(0), i));
                batch_y[r] = data.train_y[i];
            }
            let view_x = batch_x.slice(ndarray::s![..rows, ..]).to_owned();
            let view_y = batch_y.slice(ndarray::s![..rows]).to_owned();
            let (grads, sse) = batch_gradients(&mlp, &view_x, &view_y)?;
            epoch_sse += sse;
            if !sse.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            adam_step(&mut mlp, &grads, &mut state)
                .map_err(|e| match e {
                    Error::TrainingDiverged { .. } => Error::TrainingDiverged { epoch },
                    other => other,
                })?;
        }
        let train_mse = epoch_sse / n as f64;

        if epoch % tcfg.eval_every == 0 || epoch == tcfg.max_epochs {
            let validation_mse =
                sum_squared_error(&mlp, data.validation_x.view(), &data.validation_y)
                    / data.validation_x.nrows() as f64;
            if !validation_mse.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            per_epoch.push(EpochStats { epoch, train_mse, validation_mse });
            if best.as_ref().map_or(true, |(b, _, _)| validation_mse < *b) {
                best = Some((validation_mse, epoch, mlp.clone()));
            }
        }
    }

    let (best_validation_mse, best_epoch, best_mlp) = best.expect("max_epochs >= 1");
    Ok((
        best_mlp,
        TrainReport { per_epoch, best_epoch, best_validation_mse },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::Activation;

    fn synthetic_line(n: usize) -> TrainData {
        // y = 2x on [0, 1)
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let make = |xs: &[f64]| {
            (
                Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).unwrap(),
                Array1::from_iter(xs.iter().map(|x| 2.0 * x)),
            )
        };
        let (train_x, train_y) = make(&xs);
        let (validation_x, validation_y) = make(&xs[..n / 4]);
        TrainData { train_x, train_y, validation_x, validation_y }
    }

    fn linear_config(seed: u64) -> MlpConfig {
        MlpConfig {
            input_width: 1,
            hidden_layers: 0,
            hidden_width: 1,
            activation: Activation::Relu,
            init_seed: seed,
        }
    }

    #[test]
    fn linear_model_fits_a_line() {
        let data = synthetic_line(100);
        // small batches: Adam moves each parameter by at most lr per step,
        // so the step count must cover the init distance
        let tcfg = TrainConfig { batch_size: 4, max_epochs: 200, eval_every: 1, shuffle_seed: 3 };
        let (mlp, report) = train(&linear_config(1), &tcfg, &data).unwrap();
        let final_mse = sum_squared_error(&mlp, data.train_x.view(), &data.train_y)
            / data.train_x.nrows() as f64;
        assert!(final_mse < 1e-2, "final train mse {final_mse}");
        assert_eq!(report.per_epoch.len(), 200);
    }

    #[test]
    fn single_epoch_selects_epoch_one() {
        let data = synthetic_line(50);
        let tcfg = TrainConfig { batch_size: 8, max_epochs: 1, eval_every: 1, shuffle_seed: 0 };
        let (_, report) = train(&linear_config(1), &tcfg, &data).unwrap();
        assert_eq!(report.best_epoch, 1);
    }

    #[test]
    fn training_is_deterministic() {
        let data = synthetic_line(64);
        let tcfg = TrainConfig { batch_size: 16, max_epochs: 5, eval_every: 1, shuffle_seed: 9 };
        let (a, ra) = train(&linear_config(2), &tcfg, &data).unwrap();
        let (b, rb) = train(&linear_config(2), &tcfg, &data).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn snapshot_matches_reported_minimum() {
        let data = synthetic_line(80);
        let tcfg = TrainConfig { batch_size: 16, max_epochs: 30, eval_every: 1, shuffle_seed: 4 };
        let (mlp, report) = train(&linear_config(5), &tcfg, &data).unwrap();
        let min = report
            .per_epoch
            .iter()
            .map(|e| e.validation_mse)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(report.best_validation_mse, min);
        let revalidated = sum_squared_error(&mlp, data.validation_x.view(), &data.validation_y)
            / data.validation_x.nrows() as f64;
        assert_eq!(revalidated, report.best_validation_mse);
        let argmin = report
            .per_epoch
            .iter()
            .find(|e| e.validation_mse == min)
            .unwrap()
            .epoch;
        assert_eq!(report.best_epoch, argmin);
    }

    #[test]
    fn report_csv_shape() {
        let data = synthetic_line(40);
        let tcfg = TrainConfig { batch_size: 8, max_epochs: 3, eval_every: 1, shuffle_seed: 1 };
        let (_, report) = train(&linear_config(1), &tcfg, &data).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("epoch,train_mse,validation_mse\n"));
    }
}
