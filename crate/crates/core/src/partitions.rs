//! Exact Goldbach partition counts and the comet dataset.
//!
//! `count_partitions` walks the prime list up to `n / 2` and tests the
//! complement against the sieve table, so each unordered pair `p <= q`
//! with `p + q = n` is counted exactly once. `build_comet` materializes
//! one record per even number of a range; generation fans out over
//! disjoint sub-ranges and the merged output is ordered by `n` regardless
//! of chunking.

use crate::error::{Error, Result};
use crate::par;
use crate::primes::PrimeSieve;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

/// Evens per worker chunk during comet generation.
const COMET_CHUNK: usize = 4096;

/// One `(n, G(n))` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionRecord {
    pub n: u64,
    pub g: u64,
}

/// `(n, G(n))` for every even `n` in a contiguous range, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CometTable {
    records: Vec<PartitionRecord>,
}

fn check_even_target(n: u64) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::invalid(format!(
            "Goldbach counts are defined for even n >= 4, got {n}"
        )));
    }
    Ok(())
}

/// Number of unordered prime pairs `p <= q` with `p + q = n`.
pub fn count_partitions(n: u64, sieve: &PrimeSieve) -> Result<u64> {
    check_even_target(n)?;
    if n > sieve.limit() {
        return Err(Error::out_of_range(format!(
            "{n} exceeds sieve limit {}",
            sieve.limit()
        )));
    }
    let half = n / 2;
    let mut count = 0u64;
    for &p in sieve.primes() {
        if p > half {
            break;
        }
        if sieve.is_prime_unchecked(n - p) {
            count += 1;
        }
    }
    Ok(count)
}

/// Independent slow oracle: enumerate prime pairs `p <= q` directly from a
/// trial-division prime list and count the ones summing to `n`. Shares no
/// code or data with [`count_partitions`].
pub fn count_partitions_oracle(n: u64) -> Result<u64> {
    check_even_target(n)?;
    if n > 100_000 {
        return Err(Error::out_of_range(format!(
            "oracle is limited to n <= 100000, got {n}"
        )));
    }
    let primes = trial_division_primes();
    let mut count = 0u64;
    for (i, &p) in primes.iter().enumerate() {
        if p + p > n {
            break;
        }
        for &q in &primes[i..] {
            if p + q > n {
                break;
            }
            if p + q == n {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Word-parallel count: AND the low half of the prime bit table against a
/// mirrored window anchored at `n` and popcount, 64 candidates per step.
/// Same value as [`count_partitions`], an order of magnitude faster; used
/// by bulk generation while the list+membership scheme stays the reference
/// for point queries.
fn count_partitions_words(n: u64, sieve: &PrimeSieve) -> u64 {
    debug_assert!(n >= 4 && n % 2 == 0 && n <= sieve.limit());
    if n < 128 {
        return count_partitions(n, sieve).expect("validated by caller");
    }
    let half = (n / 2) as usize;
    let last_word = half >> 6;
    // mirrored bit m holds real flag (origin - m), so real flag (n - k)
    // lives at mirrored bit (origin - n + k)
    let base = sieve.mirror_origin() - n as usize;
    let mut total = 0u64;
    for j in 0..=last_word {
        let mut low = sieve.word(j);
        if j == last_word {
            let keep = (half & 63) as u32;
            low &= u64::MAX >> (63 - keep);
        }
        let high = sieve.reversed_window(base + 64 * j);
        total += (low & high).count_ones() as u64;
    }
    total
}

fn trial_division_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        (2..=100_000u64)
            .filter(|&m| {
                let mut d = 2;
                while d * d <= m {
                    if m % d == 0 {
                        return false;
                    }
                    d += 1;
                }
                true
            })
            .collect()
    })
}

/// Count every even `n` in `[lo, hi]`.
pub fn build_comet(lo: u64, hi: u64, sieve: &PrimeSieve) -> Result<CometTable> {
    check_even_target(lo)?;
    check_even_target(hi)?;
    if lo > hi {
        return Err(Error::invalid(format!("empty range: lo {lo} > hi {hi}")));
    }
    if hi > sieve.limit() {
        return Err(Error::out_of_range(format!(
            "range end {hi} exceeds sieve limit {}",
            sieve.limit()
        )));
    }
    let count = ((hi - lo) / 2 + 1) as usize;
    let chunks = par::map_chunks(count, COMET_CHUNK, |range| {
        range
            .map(|i| {
                let n = lo + 2 * i as u64;
                PartitionRecord { n, g: count_partitions_words(n, sieve) }
            })
            .collect::<Vec<_>>()
    });
    let records: Vec<PartitionRecord> = chunks.concat();
    debug_assert!(records.windows(2).all(|w| w[1].n == w[0].n + 2));
    Ok(CometTable { records })
}

impl CometTable {
    pub fn records(&self) -> &[PartitionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first_n(&self) -> u64 {
        self.records.first().map_or(0, |r| r.n)
    }

    /// Record lookup by even value, if within the table's range.
    pub fn g_of(&self, n: u64) -> Option<u64> {
        let first = self.records.first()?.n;
        if n < first || n % 2 != 0 {
            return None;
        }
        self.records.get(((n - first) / 2) as usize).map(|r| r.g)
    }

    /// Canonical dataset artifact: CSV with header `n,g`, rows ascending.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "n,g")?;
        for r in &self.records {
            writeln!(w, "{},{}", r.n, r.g)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty dataset file".into(),
        })?;
        if header?.trim() != "n,g" {
            return Err(Error::Parse {
                line: 1,
                message: "expected header `n,g`".into(),
            });
        }
        let mut records = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            let (a, b) = text.split_once(',').ok_or_else(|| Error::Parse {
                line: line_no,
                message: "expected `n,g`".into(),
            })?;
            let parse = |s: &str| {
                s.trim().parse::<u64>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad integer `{s}`: {e}"),
                })
            };
            let rec = PartitionRecord { n: parse(a)?, g: parse(b)? };
            if rec.n < 4 || rec.n % 2 != 0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("n must be even and >= 4, got {}", rec.n),
                });
            }
            if let Some(prev) = records.last() {
                let prev: &PartitionRecord = prev;
                if rec.n != prev.n + 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("gap in n: {} follows {}", rec.n, prev.n),
                    });
                }
            }
            records.push(rec);
        }
        if records.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "dataset has no records".into(),
            });
        }
        Ok(CometTable { records })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(BufReader::new(std::fs::File::open(path)?))
    }
}
