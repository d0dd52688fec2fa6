//! Command implementations: thin file-to-file wrappers over the core.

use crate::args::*;
use crate::config::Ctx;
use crate::CliError;
use goldbach_core::dataset::{load_split, save_split, shuffle_split, target_stats, SplitSpec};
use goldbach_core::estimators::{EstimatorKind, TwinPrimeConstant};
use goldbach_core::evaluation::{
    self, ablation_suite, compare_all, depth_sweep, emit_plot_data, evaluate, EstimatorPredictor,
    FnPredictor,
};
use goldbach_core::features::{BaseDigits, FeatureMask, DIGITS_PER_BASE, FEATURE_BASES};
use goldbach_core::neuralnet::{train, MlpConfig, ModelBundle, TrainConfig, TrainData};
use goldbach_core::partitions::{build_comet, CometTable};
use goldbach_core::primes::PrimeSieve;
use goldbach_core::search::{
    crt, hill_climb, realize_by_enumeration, residue_of, scan_suspicious, write_scan_csv,
    CrtResult, DigitCandidate,
};
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

fn load_dataset(path: &Path) -> Result<CometTable, CliError> {
    if !path.exists() {
        return Err(CliError::Artifact(format!(
            "dataset {} not found; generate it with `goldbach comet`",
            path.display()
        )));
    }
    Ok(CometTable::load_csv(path)?)
}

fn load_split_file(path: &Path) -> Result<goldbach_core::dataset::DataSplit, CliError> {
    if !path.exists() {
        return Err(CliError::Artifact(format!(
            "split {} not found; create it with `goldbach split`",
            path.display()
        )));
    }
    Ok(load_split(path)?)
}

fn load_model(path: &Path) -> Result<ModelBundle, CliError> {
    if !path.exists() {
        return Err(CliError::Artifact(format!(
            "model {} not found; train one with `goldbach train`",
            path.display()
        )));
    }
    Ok(ModelBundle::load(path)?)
}

/// Sieve sized for a dataset plus the factoring the estimators need.
fn sieve_for(hi: u64, cache: Option<&Path>) -> Result<PrimeSieve, CliError> {
    if let Some(path) = cache {
        if path.exists() {
            let sieve = PrimeSieve::load_cache(path)?;
            if sieve.limit() >= hi {
                return Ok(sieve);
            }
            eprintln!(
                "sieve cache {} covers only {}, rebuilding to {hi}",
                path.display(),
                sieve.limit()
            );
        }
    }
    let sieve = PrimeSieve::build(hi)?;
    if let Some(path) = cache {
        sieve.save_cache(path)?;
    }
    Ok(sieve)
}

pub fn cmd_comet(ctx: &Ctx, args: CometArgs) -> Result<(), CliError> {
    let lo = ctx.get("lo", args.lo, 4)?;
    let hi = ctx.get("hi", args.hi, 4_000_000)?;
    let out = ctx.path("out", args.out, "comet.csv");
    let cache = args.sieve_cache.map(|p| if p.is_absolute() { p } else { ctx.data_dir().join(p) });

    let sieve = sieve_for(hi, cache.as_deref())?;
    let table = build_comet(lo, hi, &sieve)?;
    table.save_csv(&out)?;
    let indices: Vec<usize> = (0..table.len()).collect();
    let (mean, _) = target_stats(&table, &indices)?;
    println!("wrote {} rows to {} (mean g = {mean:.3})", table.len(), out.display());
    Ok(())
}

pub fn cmd_split(ctx: &Ctx, args: SplitArgs) -> Result<(), CliError> {
    let dataset = ctx.path("dataset", args.dataset, "comet.csv");
    let out = ctx.path("out", args.out, "split.txt");
    let spec = SplitSpec::new(
        ctx.get("train", args.train, 0.8)?,
        ctx.get("validation", args.validation, 0.1)?,
        ctx.get("test", args.test, 0.1)?,
        ctx.get("seed", args.seed, 42)?,
    )?;
    let table = load_dataset(&dataset)?;
    let split = shuffle_split(&table, &spec)?;
    save_split(&split, &out)?;
    println!(
        "wrote {} (train {} / validation {} / test {}, seed {})",
        out.display(),
        split.train.len(),
        split.validation.len(),
        split.test.len(),
        spec.seed
    );
    Ok(())
}

struct TrainSettings {
    hidden_layers: usize,
    hidden_width: usize,
    epochs: usize,
    batch_size: usize,
    init_seed: u64,
    shuffle_seed: u64,
}

impl TrainSettings {
    fn resolve(
        ctx: &Ctx,
        hidden_layers: Option<usize>,
        hidden_width: Option<usize>,
        epochs: Option<usize>,
        batch_size: Option<usize>,
        init_seed: Option<u64>,
        shuffle_seed: Option<u64>,
    ) -> Result<Self, CliError> {
        Ok(TrainSettings {
            hidden_layers: ctx.get("hidden-layers", hidden_layers, 5)?,
            hidden_width: ctx.get("hidden-width", hidden_width, 200)?,
            epochs: ctx.get("epochs", epochs, 200)?,
            batch_size: ctx.get("batch-size", batch_size, 1024)?,
            init_seed: ctx.get("init-seed", init_seed, 1)?,
            shuffle_seed: ctx.get("shuffle-seed", shuffle_seed, 1)?,
        })
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            max_epochs: self.epochs,
            eval_every: 1,
            shuffle_seed: self.shuffle_seed,
        }
    }
}

pub fn cmd_train(ctx: &Ctx, args: TrainArgs) -> Result<(), CliError> {
    let dataset = ctx.path("dataset", args.dataset, "comet.csv");
    let split_path = ctx.path("split", args.split, "split.txt");
    let out = ctx.path("out", args.out, "model.bin");
    let report_path = ctx.path("report", args.report, "train_report.csv");
    let mask = FeatureMask::from_name(&ctx.get("mask", args.mask, "full".to_string())?)?;
    let s = TrainSettings::resolve(
        ctx,
        args.hidden_layers,
        args.hidden_width,
        args.epochs,
        args.batch_size,
        args.init_seed,
        args.shuffle_seed,
    )?;

    let table = load_dataset(&dataset)?;
    let split = load_split_file(&split_path)?;
    let n_max = table.records().last().unwrap().n;
    let data = TrainData::from_table(&table, &split, &mask, n_max)?;
    let config = MlpConfig {
        input_width: mask.width(),
        hidden_layers: s.hidden_layers,
        hidden_width: s.hidden_width,
        activation: goldbach_core::neuralnet::Activation::Relu,
        init_seed: s.init_seed,
    };
    let (mlp, report) = train(&config, &s.train_config(), &data)?;
    let bundle = ModelBundle::new(mlp, mask, n_max)?;
    bundle.save(&out)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(&report_path)?);
    report.write_csv(&mut w)?;
    w.flush()?;
    println!(
        "wrote {} (best epoch {} of {}, validation mse {:.1}); epoch log in {}",
        out.display(),
        report.best_epoch,
        s.epochs,
        report.best_validation_mse,
        report_path.display()
    );
    Ok(())
}

fn pick_indices<'s>(
    split: &'s goldbach_core::dataset::DataSplit,
    which: &str,
) -> Result<&'s [usize], CliError> {
    match which {
        "train" => Ok(&split.train),
        "validation" => Ok(&split.validation),
        "test" => Ok(&split.test),
        other => Err(CliError::Usage(format!(
            "unknown split block `{other}` (expected train|validation|test)"
        ))),
    }
}

fn read_predictions(path: &Path) -> Result<HashMap<u64, f64>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Artifact(format!("cannot read {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if idx == 0 {
            if line.trim() != "n,prediction" {
                return Err(CliError::Artifact(format!(
                    "{}: expected header `n,prediction`",
                    path.display()
                )));
            }
            continue;
        }
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let parsed = text.split_once(',').and_then(|(a, b)| {
            Some((a.trim().parse::<u64>().ok()?, b.trim().parse::<f64>().ok()?))
        });
        match parsed {
            Some((n, p)) => {
                map.insert(n, p);
            }
            None => {
                return Err(CliError::Artifact(format!(
                    "{} line {}: expected `n,prediction`",
                    path.display(),
                    idx + 1
                )))
            }
        }
    }
    Ok(map)
}

pub fn cmd_eval(ctx: &Ctx, args: EvalArgs) -> Result<(), CliError> {
    let dataset = ctx.path("dataset", args.dataset, "comet.csv");
    let split_path = ctx.path("split", args.split, "split.txt");
    let out = ctx.path("out", args.out, "eval.csv");
    let which = ctx.get("which", args.which, "test".to_string())?;

    let sources =
        usize::from(args.model.is_some()) + usize::from(args.method.is_some())
            + usize::from(args.predictions.is_some());
    if sources != 1 {
        return Err(CliError::Usage(
            "choose exactly one of --model, --method, --predictions".into(),
        ));
    }
    // usage validation happens before any artifact is touched
    let method: Option<EstimatorKind> = args.method.as_deref().map(str::parse).transpose()?;
    if !matches!(which.as_str(), "train" | "validation" | "test") {
        return Err(CliError::Usage(format!(
            "unknown split block `{which}` (expected train|validation|test)"
        )));
    }

    let table = load_dataset(&dataset)?;
    let split = load_split_file(&split_path)?;
    let indices = pick_indices(&split, &which)?;

    let report = if let Some(path) = args.model {
        let bundle = load_model(&ctx.path("model", Some(path), "model.bin"))?;
        evaluate(&bundle, &table, indices)?
    } else if let Some(kind) = method {
        let hi = table.records().last().unwrap().n;
        let sieve = sieve_for(hi, None)?;
        let c2 = TwinPrimeConstant::standard();
        evaluate(&EstimatorPredictor { kind, sieve: &sieve, c2 }, &table, indices)?
    } else {
        let path = ctx.path("predictions", args.predictions, "predictions.csv");
        let preds = read_predictions(&path)?;
        for &i in indices {
            let n = table.records()[i].n;
            if !preds.contains_key(&n) {
                return Err(CliError::Artifact(format!(
                    "{} has no prediction for n = {n}",
                    path.display()
                )));
            }
        }
        let predictor = FnPredictor { name: "cached".to_string(), f: move |n| preds[&n] };
        evaluate(&predictor, &table, indices)?
    };

    let mut w = std::io::BufWriter::new(std::fs::File::create(&out)?);
    writeln!(w, "method,mse,rmse,error_rate")?;
    writeln!(w, "{},{},{},{}", report.method_name, report.mse, report.rmse, report.error_rate)
        ?;
    w.flush()?;
    println!(
        "{} on {which}: mse {:.1}, rmse {:.2}, error rate {:.2}%",
        report.method_name,
        report.mse,
        report.rmse,
        100.0 * report.error_rate
    );
    Ok(())
}

pub fn cmd_compare(ctx: &Ctx, args: CompareArgs) -> Result<(), CliError> {
    let dataset = ctx.path("dataset", args.dataset, "comet.csv");
    let split_path = ctx.path("split", args.split, "split.txt");
    let model_path = ctx.path("model", args.model, "model.bin");
    let out = ctx.path("out", args.out, "compare.csv");

    let table = load_dataset(&dataset)?;
    let split = load_split_file(&split_path)?;
    let bundle = load_model(&model_path)?;
    let hi = table.records().last().unwrap().n;
    let sieve = sieve_for(hi, None)?;
    let c2 = TwinPrimeConstant::standard();

    let cmp = compare_all(&bundle, &table, &split.test, &sieve, c2)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(&out)?);
    cmp.write_csv(&mut w)?;
    w.flush()?;
    let mut stdout = std::io::stdout().lock();
    cmp.write_text(&mut stdout)?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn cmd_depth_sweep(ctx: &Ctx, args: DepthSweepArgs) -> Result<(), CliError> {
    let dataset = ctx.path("dataset", args.dataset, "comet.csv");
    let split_path = ctx.path("split", args.split, "split.txt");
    let out = ctx.path("out", args.out, "sweep.csv");
    let depths_raw = ctx.get("depths", args.depths, "0,3,5,7".to_string())?;
    let depths: Vec<usize> = depths_raw
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|e| CliError::Usage(format!("bad depth `{t}`: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let s = TrainSettings::resolve(
        ctx,
        None,
        args.hidden_width,
        args.epochs,
        args.batch_size,
        args.init_seed,
        args.shuffle_seed,
    )?;

    let table = load_dataset(&dataset)?;
    let split = load_split_file(&split_path)?;
    let n_max = table.records().last().unwrap().n;
    let data = TrainData::from_table(&table, &split, &FeatureMask::full(), n_max)?;
    let report = depth_sweep(&data, &depths, s.hidden_width, s.init_seed, &s.train_config())?;

    let mut w = std::io::BufWriter::new(std::fs::File::create(&out)?);
    report.write_csv(&mut w)?;
    w.flush()?;
    for row in &report.rows {
        println!(
            "hidden layers {:>2}: train mse {:>14.1}  validation mse {:>14.1}",
            row.hidden_layers, row.train_mse, row.validation_mse
        );
    }
    println!("selected depth: {} (lowest validation error); wrote {}", report.selected_depth, out.display());
    Ok(())
}

pub fn cmd_ablate(ctx: &Ctx, args: AblateArgs) -> Result<(), CliError> {
    let dataset = ctx.path("dataset", args.dataset, "comet.csv");
    let split_path = ctx.path("split", args.split, "split.txt");
    let out = ctx.path("out", args.out, "ablation.csv");
    let masks: Vec<FeatureMask> = match ctx.get("masks", args.masks, String::new())? {
        ref s if s.is_empty() => evaluation::standard_ablation_masks(),
        s => s
            .split(',')
            .map(|name| FeatureMask::from_name(name.trim()).map_err(CliError::from))
            .collect::<Result<_, _>>()?,
    };
    let s = TrainSettings::resolve(
        ctx,
        args.hidden_layers,
        args.hidden_width,
        args.epochs,
        args.batch_size,
        args.init_seed,
        args.shuffle_seed,
    )?;

    let table = load_dataset(&dataset)?;
    let split = load_split_file(&split_path)?;
    let n_max = table.records().last().unwrap().n;
    let results = ablation_suite(
        &table,
        &split,
        n_max,
        &masks,
        s.hidden_layers,
        s.hidden_width,
        s.init_seed,
        &s.train_config(),
    )?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(&out)?);
    evaluation::write_ablation_csv(&results, &mut w)?;
    w.flush()?;
    for r in &results {
        println!("{:<16} train mse {:>14.1}", r.mask_name, r.train_mse);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn print_crt(result: &CrtResult) {
    println!("modulus           = {}", result.modulus);
    println!("smallest solution = {}", result.smallest_solution);
    for &(m, r) in &result.residues {
        let check = result.solution_mod(m);
        println!(
            "  solution mod {m:>10} = {check} (residue {r}) {}",
            if check == r { "ok" } else { "MISMATCH" }
        );
    }
    println!("solution {} 10^19", if result.exceeds_pow10(19) { ">" } else { "<=" });
}

pub fn cmd_search(ctx: &Ctx, args: SearchArgs) -> Result<(), CliError> {
    let model_path = ctx.path("model", args.model, "model.bin");
    let out = ctx.path("out", args.out, "search_report.csv");
    let start = ctx.get("start", args.start, 1_000_000)?;
    let bundle = load_model(&model_path)?;

    let report = hill_climb(&bundle, start, !args.no_even_constraint)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(&out)?);
    report.write_csv(&mut w)?;
    w.flush()?;

    let final_c = &report.final_candidate;
    println!(
        "hill climb settled after {} sweeps: prediction {:.3} (anchor {})",
        report.trajectory.len(),
        final_c.prediction,
        final_c.anchor_n
    );
    for (group, base) in FEATURE_BASES.iter().enumerate() {
        println!("  base {base} digits (lsd first): {:?}", final_c.digits[group].digits());
    }
    let crt_result = goldbach_core::search::crt_combine(final_c);
    print_crt(&crt_result);
    if let Some(bound) = args.enumerate_bound {
        match realize_by_enumeration(final_c, bound) {
            Some(x) => println!("enumeration up to {bound}: found {x}"),
            None => println!("enumeration up to {bound}: no match"),
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

pub fn cmd_scan(ctx: &Ctx, args: ScanArgs) -> Result<(), CliError> {
    let model_path = ctx.path("model", args.model, "model.bin");
    let out = ctx.path("out", args.out, "scan.csv");
    let bundle = load_model(&model_path)?;
    let lo = ctx.get("lo", args.lo, 4)?;
    let hi = ctx.get("hi", args.hi, bundle.n_max)?;
    let k = ctx.get("k", args.k, 100)?;

    let sieve = sieve_for(hi, None)?;
    let hits = scan_suspicious(&bundle, lo, hi, k, Some(&sieve))?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(&out)?);
    write_scan_csv(&hits, &mut w)?;
    w.flush()?;
    let verified = hits.iter().filter(|h| h.true_g.map_or(false, |g| g >= 1)).count();
    println!(
        "wrote {} ({} rows; {} verified with G(n) >= 1)",
        out.display(),
        hits.len(),
        verified
    );
    Ok(())
}

pub fn cmd_plot(ctx: &Ctx, args: PlotArgs) -> Result<(), CliError> {
    let dataset = ctx.path("dataset", args.dataset, "comet.csv");
    let split_path = ctx.path("split", args.split, "split.txt");
    let model_path = ctx.path("model", args.model, "model.bin");
    let out_dir = ctx.path("out-dir", args.out_dir, "plots");
    let sample = ctx.get("sample", args.sample, 20)?;
    let seed = ctx.get("seed", args.seed, 7)?;

    let table = load_dataset(&dataset)?;
    let split = load_split_file(&split_path)?;
    let bundle = load_model(&model_path)?;
    let hi = table.records().last().unwrap().n;
    let sieve = sieve_for(hi, None)?;
    let c2 = TwinPrimeConstant::standard();
    let written =
        emit_plot_data(&table, &split, &bundle, &sieve, c2, sample, seed, &out_dir, args.svg)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn cmd_features(ctx: &Ctx, args: FeaturesArgs) -> Result<(), CliError> {
    let dataset = ctx.path("dataset", args.dataset, "comet.csv");
    let out = ctx.path("out", args.out, "features.csv");
    let mask = FeatureMask::from_name(&ctx.get("mask", args.mask, "full".to_string())?)?;
    let stride = ctx.get("stride", args.stride, 1)?;
    if stride == 0 {
        return Err(CliError::Usage("--stride must be >= 1".into()));
    }
    let table = load_dataset(&dataset)?;
    let n_max = table.records().last().unwrap().n;
    let indices: Vec<usize> = (0..table.len()).step_by(stride).collect();
    let mut w = std::io::BufWriter::new(std::fs::File::create(&out)?);
    goldbach_core::features::write_feature_csv(&table, &indices, &mask, n_max, &mut w)?;
    w.flush()?;
    println!("wrote {} ({} rows, {} features)", out.display(), indices.len(), mask.width());
    Ok(())
}

fn parse_digit_row(raw: &str, base: u8, msd_first: bool) -> Result<BaseDigits, CliError> {
    let mut values: Vec<u8> = raw
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u8>()
                .map_err(|e| CliError::Usage(format!("bad digit `{t}` for base {base}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if values.len() != DIGITS_PER_BASE {
        return Err(CliError::Usage(format!(
            "base {base} needs exactly {DIGITS_PER_BASE} digits, got {}",
            values.len()
        )));
    }
    if msd_first {
        values.reverse();
    }
    let array: [u8; DIGITS_PER_BASE] = values.try_into().unwrap();
    Ok(BaseDigits::from_digits(base, array)?)
}

pub fn cmd_crt(_ctx: &Ctx, args: CrtArgs) -> Result<(), CliError> {
    let msd_first = match args.order.as_str() {
        "lsd" => false,
        "msd" => true,
        other => {
            return Err(CliError::Usage(format!("unknown order `{other}` (expected lsd|msd)")))
        }
    };
    let digits = [
        parse_digit_row(&args.base2, 2, msd_first)?,
        parse_digit_row(&args.base3, 3, msd_first)?,
        parse_digit_row(&args.base5, 5, msd_first)?,
        parse_digit_row(&args.base7, 7, msd_first)?,
    ];
    let pairs: Vec<(u64, u64)> = digits
        .iter()
        .map(|d| ((d.base() as u64).pow(10), residue_of(d)))
        .collect();
    let result = crt(&pairs)?;
    print_crt(&result);
    if let Some(bound) = args.enumerate_bound {
        let candidate = DigitCandidate {
            digits,
            anchor_n: 4,
            anchor_log: 4f64.ln(),
            prediction: 0.0,
        };
        match realize_by_enumeration(&candidate, bound) {
            Some(x) => println!("enumeration up to {bound}: found {x}"),
            None => println!("enumeration up to {bound}: no match"),
        }
    }
    Ok(())
}
