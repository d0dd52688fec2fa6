//! Shuffling, splitting and summarizing the comet dataset.
//!
//! Splits are seeded permutations of the record indices partitioned at
//! fraction boundaries: train and validation sizes floor, test takes the
//! remainder. The permutation scheme is pinned (see [`crate::rng`]) and
//! recorded in the split file so runs replicate across machines.

use crate::error::{Error, Result};
use crate::partitions::CometTable;
use crate::rng::{self, RNG_SCHEME};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

const SPLIT_FILE_VERSION: &str = "goldbach-split v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_fraction: train,
            validation_fraction: validation,
            test_fraction: test,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The 0.8 / 0.1 / 0.1 split.
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec {
            train_fraction: 0.8,
            validation_fraction: 0.1,
            test_fraction: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fs = [self.train_fraction, self.validation_fraction, self.test_fraction];
        if fs.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(Error::invalid("split fractions must be positive"));
        }
        let sum: f64 = fs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split fractions sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

/// Disjoint index lists covering a comet table exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    pub spec: SplitSpec,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded uniform permutation partitioned by the fraction boundaries
/// (train first, then validation, then test).
pub fn shuffle_split(table: &CometTable, spec: &SplitSpec) -> Result<DataSplit> {
    spec.validate()?;
    if table.is_empty() {
        return Err(Error::invalid("cannot split an empty table"));
    }
    let len = table.len();
    let mut order: Vec<usize> = (0..len).collect();
    rng::shuffle(&mut order, &mut rng::seeded(spec.seed));
    let n_train = (len as f64 * spec.train_fraction).floor() as usize;
    let n_val = (len as f64 * spec.validation_fraction).floor() as usize;
    let test = order.split_off(n_train + n_val);
    let validation = order.split_off(n_train);
    Ok(DataSplit { spec: *spec, train: order, validation, test })
}

/// Arithmetic mean and population variance of `g` over selected records.
pub fn target_stats(table: &CometTable, indices: &[usize]) -> Result<(f64, f64)> {
    if indices.is_empty() {
        return Err(Error::invalid("target_stats needs a nonempty index set"));
    }
    let records = table.records();
    let mut sum = 0.0;
    for &i in indices {
        sum += records[i].g as f64;
    }
    let mean = sum / indices.len() as f64;
    let mut sq = 0.0;
    for &i in indices {
        let d = records[i].g as f64 - mean;
        sq += d * d;
    }
    Ok((mean, sq / indices.len() as f64))
}

pub fn save_split(split: &DataSplit, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{SPLIT_FILE_VERSION}")?;
    writeln!(w, "rng {RNG_SCHEME}")?;
    writeln!(w, "seed {}", split.spec.seed)?;
    writeln!(
        w,
        "fractions {} {} {}",
        split.spec.train_fraction, split.spec.validation_fraction, split.spec.test_fraction
    )?;
    for (name, block) in [
        ("train", &split.train),
        ("validation", &split.validation),
        ("test", &split.test),
    ] {
        writeln!(w, "{name} {}", block.len())?;
        for i in block {
            writeln!(w, "{i}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_split(path: &Path) -> Result<DataSplit> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let mut next_line = |expect: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((idx, line)) => Ok((idx + 1, line?)),
            None => Err(Error::Parse {
                line: 0,
                message: format!("file truncated; expected {expect}"),
            }),
        }
    };

    let (line_no, version) = next_line("version header")?;
    if version.trim() != SPLIT_FILE_VERSION {
        return Err(Error::Parse {
            line: line_no,
            message: format!("unsupported version `{}`", version.trim()),
        });
    }
    let (line_no, rng_line) = next_line("rng line")?;
    let scheme = rng_line.strip_prefix("rng ").ok_or(Error::Parse {
        line: line_no,
        message: "expected `rng <scheme>`".into(),
    })?;
    if scheme.trim() != RNG_SCHEME {
        return Err(Error::Parse {
            line: line_no,
            message: format!("unknown rng scheme `{}`", scheme.trim()),
        });
    }
    let (line_no, seed_line) = next_line("seed line")?;
    let seed: u64 = seed_line
        .strip_prefix("seed ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or(Error::Parse { line: line_no, message: "expected `seed <u64>`".into() })?;
    let (line_no, frac_line) = next_line("fractions line")?;
    let fracs: Vec<f64> = frac_line
        .strip_prefix("fractions ")
        .map(|s| s.split_whitespace().filter_map(|t| t.parse().ok()).collect())
        .unwrap_or_default();
    if fracs.len() != 3 {
        return Err(Error::Parse {
            line: line_no,
            message: "expected `fractions <train> <validation> <test>`".into(),
        });
    }
    let spec = SplitSpec {
        train_fraction: fracs[0],
        validation_fraction: fracs[1],
        test_fraction: fracs[2],
        seed,
    };
    spec.validate().map_err(|e| Error::Parse {
        line: line_no,
        message: format!("bad fractions: {e}"),
    })?;

    let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(3);
    for name in ["train", "validation", "test"] {
        let (line_no, header) = next_line("block header")?;
        let count: usize = header
            .strip_prefix(name)
            .and_then(|s| s.trim().parse().ok())
            .ok_or(Error::Parse {
                line: line_no,
                message: format!("expected `{name} <count>`"),
            })?;
        let mut block = Vec::with_capacity(count);
        for _ in 0..count {
            let (line_no, value) = next_line("index")?;
            block.push(value.trim().parse().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad index: {e}"),
            })?);
        }
        blocks.push(block);
    }
    let test = blocks.pop().unwrap();
    let validation = blocks.pop().unwrap();
    let train = blocks.pop().unwrap();
    Ok(DataSplit { spec, train, validation, test })
}
