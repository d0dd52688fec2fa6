// rough training-throughput probe
use goldbach_core::dataset::{shuffle_split, SplitSpec};
use goldbach_core::features::FeatureMask;
use goldbach_core::neuralnet::{train, Activation, MlpConfig, TrainConfig, TrainData};
use goldbach_core::partitions::build_comet;
use goldbach_core::primes::PrimeSieve;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let sieve = PrimeSieve::build(400_000).unwrap();
    let table = build_comet(4, 400_000, &sieve).unwrap();
    let split = shuffle_split(&table, &SplitSpec::with_seed(42)).unwrap();
    let data = TrainData::from_table(&table, &split, &FeatureMask::full(), 400_000).unwrap();
    println!("data prep: {:?}", t0.elapsed());
    let config = MlpConfig {
        input_width: 42,
        hidden_layers: 5,
        hidden_width: 200,
        activation: Activation::Relu,
        init_seed: 0,
    };
    let tcfg = TrainConfig { batch_size: 1024, max_epochs: 2, eval_every: 1, shuffle_seed: 1000 };
    let t0 = Instant::now();
    let (_, report) = train(&config, &tcfg, &data).unwrap();
    println!("2 epochs: {:?} -> per-epoch {:?}", t0.elapsed(), t0.elapsed() / 2);
    for e in &report.per_epoch {
        println!("  epoch {}: train {} val {}", e.epoch, e.train_mse, e.validation_mse);
    }
}
