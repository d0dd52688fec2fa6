//! Scoring predictors against the exact dataset.
//!
//! Every method in a comparison is scored on the identical test index set;
//! the analytic estimators need no training but are held to the same
//! held-out protocol as the model. The error rate is RMSE divided by the
//! mean of the true counts over the scored set.

use crate::dataset::DataSplit;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, TwinPrimeConstant};
use crate::features::FeatureMask;
use crate::neuralnet::{train, ModelBundle, MlpConfig, TrainConfig, TrainData};
use crate::par;
use crate::partitions::CometTable;
use crate::primes::PrimeSieve;
use crate::rng;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::Path;

/// Numbers per scoring chunk.
const SCORE_CHUNK: usize = 8192;

/// Anything that can predict partition counts for a batch of evens.
pub trait Predictor: Sync {
    fn name(&self) -> String;
    fn predict_batch(&self, ns: &[u64]) -> Result<Vec<f64>>;
}

impl Predictor for ModelBundle {
    fn name(&self) -> String {
        "model".into()
    }

    fn predict_batch(&self, ns: &[u64]) -> Result<Vec<f64>> {
        ModelBundle::predict_batch(self, ns)
    }
}

/// An analytic estimator bound to its sieve and constant.
pub struct EstimatorPredictor<'a> {
    pub kind: EstimatorKind,
    pub sieve: &'a PrimeSieve,
    pub c2: &'a TwinPrimeConstant,
}

impl Predictor for EstimatorPredictor<'_> {
    fn name(&self) -> String {
        self.kind.name().into()
    }

    fn predict_batch(&self, ns: &[u64]) -> Result<Vec<f64>> {
        ns.iter().map(|&n| self.kind.evaluate(n, self.sieve, self.c2)).collect()
    }
}

/// Wrap a plain function as a predictor (used by tests and cached
/// prediction files).
pub struct FnPredictor<F: Fn(u64) -> f64 + Sync> {
    pub name: String,
    pub f: F,
}

impl<F: Fn(u64) -> f64 + Sync> Predictor for FnPredictor<F> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn predict_batch(&self, ns: &[u64]) -> Result<Vec<f64>> {
        Ok(ns.iter().map(|&n| (self.f)(n)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method_name: String,
    pub mse: f64,
    pub rmse: f64,
    pub error_rate: f64,
}

/// MSE/RMSE/error-rate of a predictor over selected records.
pub fn evaluate(
    predictor: &dyn Predictor,
    table: &CometTable,
    indices: &[usize],
) -> Result<EvalReport> {
    if indices.is_empty() {
        return Err(Error::invalid("evaluate needs a nonempty index set"));
    }
    let records = table.records();
    let partials = par::map_chunks(indices.len(), SCORE_CHUNK, |range| -> Result<(f64, f64)> {
        let ns: Vec<u64> = indices[range.clone()].iter().map(|&i| records[i].n).collect();
        let preds = predictor.predict_batch(&ns)?;
        let mut sse = 0.0;
        let mut target_sum = 0.0;
        for (k, &i) in indices[range].iter().enumerate() {
            let t = records[i].g as f64;
            let d = preds[k] - t;
            sse += d * d;
            target_sum += t;
        }
        Ok((sse, target_sum))
    });
    let mut sse = 0.0;
    let mut target_sum = 0.0;
    for p in partials {
        let (s, t) = p?;
        sse += s;
        target_sum += t;
    }
    let mse = sse / indices.len() as f64;
    let rmse = mse.sqrt();
    let mean = target_sum / indices.len() as f64;
    Ok(EvalReport {
        method_name: predictor.name(),
        mse,
        rmse,
        error_rate: rmse / mean,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub report: EvalReport,
    pub requires_factorization: bool,
}

/// One row per method, all scored on the same index set.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    /// Hash of the shared index set; identical for every row by
    /// construction and recorded so consumers can assert it.
    pub index_hash: u64,
}

pub fn hash_indices(indices: &[usize]) -> u64 {
    let mut h = DefaultHasher::new();
    indices.hash(&mut h);
    h.finish()
}

/// Score the four estimators and the model on the same test indices.
pub fn compare_all(
    model: &ModelBundle,
    table: &CometTable,
    test_indices: &[usize],
    sieve: &PrimeSieve,
    c2: &TwinPrimeConstant,
) -> Result<ComparisonTable> {
    let mut rows = Vec::with_capacity(5);
    for kind in [EstimatorKind::G1, EstimatorKind::G2, EstimatorKind::G3, EstimatorKind::G4] {
        let predictor = EstimatorPredictor { kind, sieve, c2 };
        rows.push(ComparisonRow {
            report: evaluate(&predictor, table, test_indices)?,
            requires_factorization: kind.requires_factorization(),
        });
    }
    rows.push(ComparisonRow {
        report: evaluate(model, table, test_indices)?,
        requires_factorization: false,
    });
    Ok(ComparisonTable { rows, index_hash: hash_indices(test_indices) })
}

impl ComparisonTable {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "method,mse,rmse,error_rate,requires_factorization")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                row.report.method_name,
                row.report.mse,
                row.report.rmse,
                row.report.error_rate,
                row.requires_factorization
            )?;
        }
        Ok(())
    }

    pub fn write_text<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{:<8} {:>16} {:>12} {:>12}  factorization", "method", "mse", "rmse", "error")?;
        for row in &self.rows {
            writeln!(
                w,
                "{:<8} {:>16.1} {:>12.2} {:>11.2}%  {}",
                row.report.method_name,
                row.report.mse,
                row.report.rmse,
                100.0 * row.report.error_rate,
                if row.requires_factorization { "required" } else { "-" }
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthResult {
    pub hidden_layers: usize,
    pub train_mse: f64,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthSweepReport {
    pub rows: Vec<DepthResult>,
    pub selected_depth: usize,
}

/// Train one model per depth with shared seeds and pick the depth with the
/// lowest validation error. `train_mse` is taken at the best epoch.
pub fn depth_sweep(
    data: &TrainData,
    depths: &[usize],
    hidden_width: usize,
    init_seed: u64,
    tcfg: &TrainConfig,
) -> Result<DepthSweepReport> {
    if depths.is_empty() {
        return Err(Error::invalid("depth sweep needs at least one depth"));
    }
    let mut rows = Vec::with_capacity(depths.len());
    for &hidden_layers in depths {
        let config = MlpConfig {
            input_width: data.train_x.ncols(),
            hidden_layers,
            hidden_width,
            activation: crate::neuralnet::Activation::Relu,
            init_seed,
        };
        let (_, report) = train(&config, tcfg, data)?;
        let at_best = report
            .per_epoch
            .iter()
            .find(|e| e.epoch == report.best_epoch)
            .expect("best epoch is logged");
        rows.push(DepthResult {
            hidden_layers,
            train_mse: at_best.train_mse,
            validation_mse: report.best_validation_mse,
        });
    }
    let selected_depth = rows
        .iter()
        .min_by(|a, b| a.validation_mse.total_cmp(&b.validation_mse))
        .map(|r| r.hidden_layers)
        .unwrap();
    Ok(DepthSweepReport { rows, selected_depth })
}

impl DepthSweepReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "hidden_layers,train_mse,validation_mse,selected")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.hidden_layers,
                r.train_mse,
                r.validation_mse,
                r.hidden_layers == self.selected_depth
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationResult {
    pub mask_name: String,
    pub train_mse: f64,
    pub validation_mse: f64,
}

/// Retrain the chosen architecture once per feature mask.
pub fn ablation_suite(
    table: &CometTable,
    split: &DataSplit,
    n_max: u64,
    masks: &[FeatureMask],
    hidden_layers: usize,
    hidden_width: usize,
    init_seed: u64,
    tcfg: &TrainConfig,
) -> Result<Vec<AblationResult>> {
    let mut out = Vec::with_capacity(masks.len());
    for mask in masks {
        let data = TrainData::from_table(table, split, mask, n_max)?;
        let config = MlpConfig {
            input_width: mask.width(),
            hidden_layers,
            hidden_width,
            activation: crate::neuralnet::Activation::Relu,
            init_seed,
        };
        let (_, report) = train(&config, tcfg, &data)?;
        let at_best = report
            .per_epoch
            .iter()
            .find(|e| e.epoch == report.best_epoch)
            .expect("best epoch is logged");
        out.push(AblationResult {
            mask_name: mask.name(),
            train_mse: at_best.train_mse,
            validation_mse: report.best_validation_mse,
        });
    }
    Ok(out)
}

/// The canonical ablation set: the full layout, each base removed, each
/// scalar removed, and least-significant-digits only.
pub fn standard_ablation_masks() -> Vec<FeatureMask> {
    [
        "full",
        "without-base2",
        "without-base3",
        "without-base5",
        "without-base7",
        "without-log",
        "without-number",
        "lsd-only",
    ]
    .iter()
    .map(|name| FeatureMask::from_name(name).unwrap())
    .collect()
}

pub fn write_ablation_csv<W: Write>(results: &[AblationResult], w: &mut W) -> Result<()> {
    writeln!(w, "mask,train_mse,validation_mse")?;
    for r in results {
        writeln!(w, "{},{},{}", r.mask_name, r.train_mse, r.validation_mse)?;
    }
    Ok(())
}

/// Plot artifacts: the comet scatter data, a sampled method comparison,
/// and optional standalone SVG charts of both.
pub fn emit_plot_data(
    table: &CometTable,
    split: &DataSplit,
    model: &ModelBundle,
    sieve: &PrimeSieve,
    c2: &TwinPrimeConstant,
    sample_size: usize,
    seed: u64,
    out_dir: &Path,
    render_svg: bool,
) -> Result<Vec<std::path::PathBuf>> {
    if sample_size > split.test.len() {
        return Err(Error::invalid(format!(
            "sample size {sample_size} exceeds test set size {}",
            split.test.len()
        )));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let comet_path = out_dir.join("comet.csv");
    table.save_csv(&comet_path)?;
    written.push(comet_path);

    // seeded sample of test records, ascending by n for readability
    let mut pool = split.test.clone();
    rng::shuffle(&mut pool, &mut rng::seeded(seed));
    let mut sample: Vec<usize> = pool.into_iter().take(sample_size).collect();
    sample.sort_unstable_by_key(|&i| table.records()[i].n);

    let ns: Vec<u64> = sample.iter().map(|&i| table.records()[i].n).collect();
    let model_preds = model.predict_batch(&ns)?;
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for kind in [EstimatorKind::G1, EstimatorKind::G2, EstimatorKind::G3, EstimatorKind::G4] {
        let preds = EstimatorPredictor { kind, sieve, c2 }.predict_batch(&ns)?;
        columns.push((kind.name().into(), preds));
    }
    columns.push(("model".into(), model_preds));

    let cmp_path = out_dir.join("comparison.csv");
    {
        let mut w = std::io::BufWriter::new(std::fs::File::create(&cmp_path)?);
        let names: Vec<String> = columns.iter().map(|(n, _)| n.clone()).collect();
        writeln!(w, "n,true,{}", names.join(","))?;
        for (row, &i) in sample.iter().enumerate() {
            let rec = table.records()[i];
            let values: Vec<String> =
                columns.iter().map(|(_, v)| format!("{}", v[row])).collect();
            writeln!(w, "{},{},{}", rec.n, rec.g, values.join(","))?;
        }
        w.flush()?;
    }
    written.push(cmp_path);

    if render_svg {
        let comet_svg = out_dir.join("comet.svg");
        plot::comet_scatter(table, &comet_svg)?;
        written.push(comet_svg);
        let cmp_svg = out_dir.join("comparison.svg");
        plot::comparison_chart(&ns, &sample, table, &columns, &cmp_svg)?;
        written.push(cmp_svg);
    }
    Ok(written)
}

/// Minimal hand-rolled SVG charts; standalone files, no external renderer.
mod plot {
    use super::*;

    const W: f64 = 900.0;
    const H: f64 = 600.0;
    const MARGIN: f64 = 60.0;
    /// Cap on plotted comet points; larger tables are stride-sampled.
    const MAX_POINTS: usize = 40_000;

    fn open(path: &Path, title: &str) -> Result<std::io::BufWriter<std::fs::File>> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        )?;
        writeln!(w, r#"<rect width="{W}" height="{H}" fill="white"/>"#)?;
        writeln!(
            w,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#,
            W / 2.0
        )?;
        Ok(w)
    }

    struct Scale {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    }

    impl Scale {
        fn x(&self, v: f64) -> f64 {
            MARGIN + (v - self.x_min) / (self.x_max - self.x_min) * (W - 2.0 * MARGIN)
        }

        fn y(&self, v: f64) -> f64 {
            H - MARGIN - (v - self.y_min) / (self.y_max - self.y_min) * (H - 2.0 * MARGIN)
        }

        fn axes<Wr: Write>(&self, w: &mut Wr) -> Result<()> {
            writeln!(
                w,
                r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
                m = MARGIN,
                b = H - MARGIN,
                r = W - MARGIN,
                t = MARGIN
            )?;
            for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let xv = self.x_min + frac * (self.x_max - self.x_min);
                let yv = self.y_min + frac * (self.y_max - self.y_min);
                writeln!(
                    w,
                    r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{:.0}</text>"#,
                    self.x(xv),
                    H - MARGIN + 16.0,
                    xv
                )?;
                writeln!(
                    w,
                    r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{:.0}</text>"#,
                    MARGIN - 6.0,
                    self.y(yv) + 3.0,
                    yv
                )?;
            }
            Ok(())
        }
    }

    pub(super) fn comet_scatter(table: &CometTable, path: &Path) -> Result<()> {
        let records = table.records();
        let stride = records.len().div_ceil(MAX_POINTS).max(1);
        let scale = Scale {
            x_min: records.first().unwrap().n as f64,
            x_max: records.last().unwrap().n as f64,
            y_min: 0.0,
            y_max: records.iter().map(|r| r.g).max().unwrap() as f64 * 1.05,
        };
        let mut w = open(path, "partition counts")?;
        scale.axes(&mut w)?;
        for rec in records.iter().step_by(stride) {
            writeln!(
                w,
                r#"<circle cx="{:.1}" cy="{:.1}" r="1" fill="steelblue" fill-opacity="0.5"/>"#,
                scale.x(rec.n as f64),
                scale.y(rec.g as f64)
            )?;
        }
        writeln!(w, "</svg>")?;
        Ok(())
    }

    pub(super) fn comparison_chart(
        ns: &[u64],
        sample: &[usize],
        table: &CometTable,
        columns: &[(String, Vec<f64>)],
        path: &Path,
    ) -> Result<()> {
        let truth: Vec<f64> = sample.iter().map(|&i| table.records()[i].g as f64).collect();
        let y_max = columns
            .iter()
            .flat_map(|(_, v)| v.iter())
            .chain(truth.iter())
            .fold(0.0f64, |a, &b| a.max(b));
        let scale = Scale {
            x_min: 0.0,
            x_max: (ns.len() - 1) as f64,
            y_min: 0.0,
            y_max: y_max * 1.05,
        };
        let colors = ["crimson", "darkorange", "seagreen", "purple", "steelblue"];
        let mut w = open(path, "sampled test numbers: methods vs true counts")?;
        scale.axes(&mut w)?;
        for (row, t) in truth.iter().enumerate() {
            writeln!(
                w,
                r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="black"/>"#,
                scale.x(row as f64),
                scale.y(*t)
            )?;
        }
        for (c, (name, values)) in columns.iter().enumerate() {
            let points: Vec<String> = values
                .iter()
                .enumerate()
                .map(|(row, v)| format!("{:.1},{:.1}", scale.x(row as f64), scale.y(*v)))
                .collect();
            let color = colors[c % colors.len()];
            writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                points.join(" ")
            )?;
            writeln!(
                w,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{name}</text>"#,
                W - MARGIN + 6.0,
                MARGIN + 16.0 * c as f64
            )?;
        }
        writeln!(w, "</svg>")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{shuffle_split, SplitSpec};
    use crate::estimators::twin_prime_constant;
    use crate::neuralnet::{Activation, Mlp};
    use crate::partitions::build_comet;

    fn fixture() -> (CometTable, PrimeSieve) {
        let sieve = PrimeSieve::build(4000).unwrap();
        let table = build_comet(4, 4000, &sieve).unwrap();
        (table, sieve)
    }

    fn constant_predictor(c: f64) -> FnPredictor<impl Fn(u64) -> f64 + Sync> {
        FnPredictor { name: format!("const{c}"), f: move |_| c }
    }

    #[test]
    fn perfect_predictor_scores_zero() {
        let (table, _) = fixture();
        let truth: Vec<u64> = table.records().iter().map(|r| r.g).collect();
        let first = table.first_n();
        let p = FnPredictor {
            name: "oracle".into(),
            f: move |n| truth[((n - first) / 2) as usize] as f64,
        };
        let indices: Vec<usize> = (0..table.len()).collect();
        let report = evaluate(&p, &table, &indices).unwrap();
        assert_eq!(report.mse, 0.0);
        assert_eq!(report.error_rate, 0.0);
    }

    #[test]
    fn constant_mean_predictor_scores_variance() {
        let (table, _) = fixture();
        let indices: Vec<usize> = (0..table.len()).collect();
        let (mean, variance) = crate::dataset::target_stats(&table, &indices).unwrap();
        let report = evaluate(&constant_predictor(mean), &table, &indices).unwrap();
        assert!((report.mse - variance).abs() < 1e-9 * variance.max(1.0));
    }

    #[test]
    fn error_rate_is_rmse_over_mean() {
        let (table, _) = fixture();
        let indices: Vec<usize> = (0..table.len()).step_by(3).collect();
        let report = evaluate(&constant_predictor(5.0), &table, &indices).unwrap();
        let (mean, _) = crate::dataset::target_stats(&table, &indices).unwrap();
        assert!((report.error_rate - report.rmse / mean).abs() < 1e-12);
        assert!((report.rmse - report.mse.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn evaluate_is_order_invariant() {
        let (table, _) = fixture();
        let mut indices: Vec<usize> = (0..table.len()).collect();
        let a = evaluate(&constant_predictor(3.0), &table, &indices).unwrap();
        indices.reverse();
        let b = evaluate(&constant_predictor(3.0), &table, &indices).unwrap();
        assert!((a.mse - b.mse).abs() < 1e-9);
        assert!(evaluate(&constant_predictor(1.0), &table, &[]).is_err());
    }

    #[test]
    fn comparison_has_five_rows_with_flags() {
        let (table, sieve) = fixture();
        let c2 = twin_prime_constant(4000).unwrap();
        let split = shuffle_split(&table, &SplitSpec::with_seed(1)).unwrap();
        let config = MlpConfig {
            input_width: 42,
            hidden_layers: 1,
            hidden_width: 8,
            activation: Activation::Relu,
            init_seed: 1,
        };
        let bundle =
            ModelBundle::new(Mlp::init(&config).unwrap(), FeatureMask::full(), 4000).unwrap();
        let cmp = compare_all(&bundle, &table, &split.test, &sieve, &c2).unwrap();
        let names: Vec<&str> = cmp.rows.iter().map(|r| r.report.method_name.as_str()).collect();
        assert_eq!(names, vec!["g1", "g2", "g3", "g4", "model"]);
        let flags: Vec<bool> = cmp.rows.iter().map(|r| r.requires_factorization).collect();
        assert_eq!(flags, vec![true, true, false, false, false]);
        assert_eq!(cmp.index_hash, hash_indices(&split.test));

        let mut csv = Vec::new();
        cmp.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 6);
    }

    #[test]
    fn sweep_selects_argmin() {
        let (table, _) = fixture();
        let split = shuffle_split(&table, &SplitSpec::with_seed(3)).unwrap();
        let data = TrainData::from_table(&table, &split, &FeatureMask::full(), 4000).unwrap();
        let tcfg = TrainConfig { batch_size: 256, max_epochs: 2, eval_every: 1, shuffle_seed: 5 };
        let report = depth_sweep(&data, &[0, 1], 8, 3, &tcfg).unwrap();
        assert_eq!(report.rows.len(), 2);
        let min_row = report
            .rows
            .iter()
            .min_by(|a, b| a.validation_mse.total_cmp(&b.validation_mse))
            .unwrap();
        assert_eq!(report.selected_depth, min_row.hidden_layers);
    }

    #[test]
    fn plot_artifacts_are_written() {
        let (table, sieve) = fixture();
        let c2 = twin_prime_constant(4000).unwrap();
        let split = shuffle_split(&table, &SplitSpec::with_seed(7)).unwrap();
        let config = MlpConfig {
            input_width: 42,
            hidden_layers: 0,
            hidden_width: 1,
            activation: Activation::Relu,
            init_seed: 2,
        };
        let bundle =
            ModelBundle::new(Mlp::init(&config).unwrap(), FeatureMask::full(), 4000).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let written =
            emit_plot_data(&table, &split, &bundle, &sieve, &c2, 20, 11, dir.path(), true)
                .unwrap();
        assert_eq!(written.len(), 4);
        let comparison = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
        assert_eq!(comparison.lines().count(), 21); // header + 20 rows

        // same seed, same sample
        let again =
            emit_plot_data(&table, &split, &bundle, &sieve, &c2, 20, 11, dir.path(), false)
                .unwrap();
        assert_eq!(again.len(), 2);
        let repeat = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
        assert_eq!(comparison, repeat);

        // oversized sample is rejected
        let too_big = split.test.len() + 1;
        assert!(emit_plot_data(&table, &split, &bundle, &sieve, &c2, too_big, 1, dir.path(), false)
            .is_err());
    }
}
