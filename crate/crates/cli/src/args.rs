//! Command-line surface.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

/// Goldbach partition workbench: dataset generation, analytic estimators,
/// digit-feature regression, and violator search.
#[derive(Parser, Debug)]
#[command(name = "goldbach", version, max_term_width = 100)]
pub struct Cli {
    /// Optional key=value config file; flags override file entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory artifacts live in (also GOLDBACH_DATA_DIR; default ".")
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,

    /// Cap on worker threads (default: machine parallelism)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the exact (n, G(n)) dataset as CSV
    Comet(CometArgs),
    /// Shuffle the dataset into train/validation/test index blocks
    Split(SplitArgs),
    /// Train the regression network and save the best-validation snapshot
    Train(TrainArgs),
    /// Score one predictor (model, estimator, or cached predictions)
    Eval(EvalArgs),
    /// Score the four estimators and the model on the shared test set
    Compare(CompareArgs),
    /// Train one model per hidden-layer count and tabulate both errors
    DepthSweep(DepthSweepArgs),
    /// Retrain the chosen architecture once per feature mask
    Ablate(AblateArgs),
    /// Hill-climb digit features toward minimal predictions, then realize
    /// the candidate as an integer via the Chinese Remainder Theorem
    Search(SearchArgs),
    /// Rank a range by model prediction and verify the lowest k exactly
    Scan(ScanArgs),
    /// Emit plot data (comet scatter, sampled method comparison)
    Plot(PlotArgs),
    /// Solve explicit four-base digit patterns for the smallest integer
    Crt(CrtArgs),
    /// Export the feature matrix as CSV (n, features, target)
    Features(FeaturesArgs),
}

#[derive(Args, Debug)]
pub struct CometArgs {
    /// First even number (default 4)
    #[arg(long)]
    pub lo: Option<u64>,
    /// Last even number (default 4000000)
    #[arg(long)]
    pub hi: Option<u64>,
    /// Output CSV (default comet.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sieve bit-table cache: loaded when present, written after building
    #[arg(long)]
    pub sieve_cache: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Dataset CSV (default comet.csv)
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output split file (default split.txt)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shuffle seed (default 42)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train fraction (default 0.8)
    #[arg(long)]
    pub train: Option<f64>,
    /// Validation fraction (default 0.1)
    #[arg(long)]
    pub validation: Option<f64>,
    /// Test fraction (default 0.1)
    #[arg(long)]
    pub test: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Output model file (default model.bin)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-epoch error log CSV (default train_report.csv)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Hidden layer count; 0 is plain linear regression (default 5)
    #[arg(long)]
    pub hidden_layers: Option<usize>,
    /// Neurons per hidden layer (default 200)
    #[arg(long)]
    pub hidden_width: Option<usize>,
    /// Training epochs (default 200)
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Minibatch size (default 1024)
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Feature mask name (default full)
    #[arg(long)]
    pub mask: Option<String>,
    /// Weight init seed (default 1)
    #[arg(long)]
    pub init_seed: Option<u64>,
    /// Epoch shuffle seed (default 1)
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Which split block to score (train|validation|test, default test)
    #[arg(long)]
    pub which: Option<String>,
    /// Score a trained model file
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Score an analytic estimator (g1|g2|g3|g4|lb)
    #[arg(long)]
    pub method: Option<String>,
    /// Score cached predictions from a CSV with header `n,prediction`
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Output CSV (default eval.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output CSV (default compare.csv); a text table goes to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DepthSweepArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Comma-separated hidden-layer counts (default 0,3,5,7)
    #[arg(long)]
    pub depths: Option<String>,
    #[arg(long)]
    pub hidden_width: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub init_seed: Option<u64>,
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    /// Output CSV (default sweep.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Comma-separated mask names (default: all eight)
    #[arg(long)]
    pub masks: Option<String>,
    #[arg(long)]
    pub hidden_layers: Option<usize>,
    #[arg(long)]
    pub hidden_width: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub init_seed: Option<u64>,
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    /// Output CSV (default ablation.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Anchor number for the scalar features (default 1000000)
    #[arg(long)]
    pub start: Option<u64>,
    /// Allow the base-2 low bit to change (drops the even constraint)
    #[arg(long)]
    pub no_even_constraint: bool,
    /// Trajectory CSV (default search_report.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also run the exhaustive realization up to this bound for comparison
    #[arg(long)]
    pub enumerate_bound: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub lo: Option<u64>,
    #[arg(long)]
    pub hi: Option<u64>,
    /// How many lowest-prediction numbers to keep (default 100)
    #[arg(long)]
    pub k: Option<usize>,
    /// Output CSV (default scan.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Test numbers to sample for the comparison chart (default 20)
    #[arg(long)]
    pub sample: Option<usize>,
    /// Sampling seed (default 7)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default plots)
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also render standalone SVG charts
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct CrtArgs {
    /// Ten comma-separated base-2 digits
    #[arg(long)]
    pub base2: String,
    /// Ten comma-separated base-3 digits
    #[arg(long)]
    pub base3: String,
    /// Ten comma-separated base-5 digits
    #[arg(long)]
    pub base5: String,
    /// Ten comma-separated base-7 digits
    #[arg(long)]
    pub base7: String,
    /// Digit order of the inputs: lsd (least significant first) or msd
    #[arg(long, default_value = "lsd")]
    pub order: String,
    /// Also run the exhaustive realization up to this bound for comparison
    #[arg(long)]
    pub enumerate_bound: Option<u64>,
}

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Feature mask name (default full)
    #[arg(long)]
    pub mask: Option<String>,
    /// Output CSV (default features.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Export only every k-th record (default 1 = all)
    #[arg(long)]
    pub stride: Option<usize>,
}
