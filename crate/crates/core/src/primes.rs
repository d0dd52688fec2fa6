//! Prime sieve and odd-prime factoring.
//!
//! A dense bit-table sieve of Eratosthenes backs every primality query in
//! the pipeline. Construction is single-writer; a built sieve is immutable
//! and shared read-only by the parallel counting code.

use crate::error::{Error, Result};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

/// Primality table up to an inclusive limit, plus the ascending prime list.
pub struct PrimeSieve {
    limit: u64,
    // bit i set <=> i prime; 64 flags per word, LSB first; one zero guard
    // word past the end for unaligned 64-bit window reads
    words: Vec<u64>,
    // words mirrored end-to-start: bit i here is bit (64*n_words - 1 - i)
    // of `words`; lets pair counting read descending runs as ascending
    reversed: Vec<u64>,
    primes: Vec<u64>,
}

impl PrimeSieve {
    /// Sieve of Eratosthenes over `[0, limit]`.
    pub fn build(limit: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::invalid(format!("sieve limit must be >= 2, got {limit}")));
        }
        let len = limit as usize + 1;
        let mut words = vec![u64::MAX; len.div_ceil(64)];
        // clear bits beyond limit so the on-disk form is canonical
        let tail = len % 64;
        if tail != 0 {
            *words.last_mut().unwrap() = (1u64 << tail) - 1;
        }
        clear_bit(&mut words, 0);
        clear_bit(&mut words, 1);
        let mut p = 2usize;
        while p * p < len {
            if get_bit(&words, p) {
                let mut m = p * p;
                while m < len {
                    clear_bit(&mut words, m);
                    m += p;
                }
            }
            p += 1;
        }
        let primes = (0..len).filter(|&i| get_bit(&words, i)).map(|i| i as u64).collect();
        Ok(Self::assemble(limit, words, primes))
    }

    fn assemble(limit: u64, mut words: Vec<u64>, primes: Vec<u64>) -> Self {
        let mut reversed: Vec<u64> = words.iter().rev().map(|w| w.reverse_bits()).collect();
        words.push(0);
        reversed.push(0);
        PrimeSieve { limit, words, reversed, primes }
    }

    fn real_word_count(&self) -> usize {
        (self.limit as usize + 1).div_ceil(64)
    }

    /// Primality flags packed 64 per word (guard word excluded).
    #[inline]
    pub(crate) fn word(&self, j: usize) -> u64 {
        self.words[j]
    }

    /// 64 consecutive flags of the mirrored table starting at bit `m`.
    #[inline]
    pub(crate) fn reversed_window(&self, m: usize) -> u64 {
        let (w, s) = (m >> 6, m & 63);
        if s == 0 {
            self.reversed[w]
        } else {
            (self.reversed[w] >> s) | (self.reversed[w + 1] << (64 - s))
        }
    }

    /// Bit position in the mirrored table holding flag 0 of the real one.
    #[inline]
    pub(crate) fn mirror_origin(&self) -> usize {
        64 * self.real_word_count() - 1
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Ascending list of all primes `<= limit`.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Constant-time primality query.
    pub fn is_prime(&self, n: u64) -> Result<bool> {
        if n > self.limit {
            return Err(Error::out_of_range(format!(
                "{n} exceeds sieve limit {}",
                self.limit
            )));
        }
        Ok(get_bit(&self.words, n as usize))
    }

    /// Unchecked table lookup for hot loops; `n` must be `<= limit`.
    #[inline]
    pub(crate) fn is_prime_unchecked(&self, n: u64) -> bool {
        get_bit(&self.words, n as usize)
    }

    /// Write the cache file: 8-byte little-endian limit, then the raw bit
    /// array (bit `i` of byte `i / 8` is the primality flag for `i`).
    pub fn save_cache(&self, path: &Path) -> Result<()> {
        let real = self.real_word_count();
        let mut out = Vec::with_capacity(8 + real * 8);
        out.extend_from_slice(&self.limit.to_le_bytes());
        for w in &self.words[..real] {
            out.extend_from_slice(&w.to_le_bytes());
        }
        let mut f = fs::File::create(path)?;
        f.write_all(&out)?;
        Ok(())
    }

    /// Load a cache written by [`PrimeSieve::save_cache`]; the prime list is
    /// rebuilt from the bit array.
    pub fn load_cache(path: &Path) -> Result<Self> {
        let mut f = fs::File::open(path)?;
        let mut header = [0u8; 8];
        f.read_exact(&mut header).map_err(|_| Error::Parse {
            line: 0,
            message: "sieve cache shorter than 8-byte header".into(),
        })?;
        let limit = u64::from_le_bytes(header);
        if limit < 2 {
            return Err(Error::Parse {
                line: 0,
                message: format!("sieve cache header has limit {limit} < 2"),
            });
        }
        let len = limit as usize + 1;
        let n_words = len.div_ceil(64);
        let mut raw = vec![0u8; n_words * 8];
        f.read_exact(&mut raw).map_err(|_| Error::Parse {
            line: 0,
            message: "sieve cache truncated".into(),
        })?;
        let words: Vec<u64> = raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if get_bit(&words, 0) || get_bit(&words, 1) || !get_bit(&words, 2) {
            return Err(Error::Parse {
                line: 0,
                message: "sieve cache bit table fails basic sanity (0/1/2 flags)".into(),
            });
        }
        let primes = (0..len).filter(|&i| get_bit(&words, i)).map(|i| i as u64).collect();
        Ok(Self::assemble(limit, words, primes))
    }
}

#[inline]
fn get_bit(words: &[u64], i: usize) -> bool {
    (words[i >> 6] >> (i & 63)) & 1 == 1
}

#[inline]
fn clear_bit(words: &mut [u64], i: usize) {
    words[i >> 6] &= !(1u64 << (i & 63));
}

/// Ascending distinct odd primes dividing `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OddFactorSet {
    pub n: u64,
    pub factors: Vec<u64>,
}

/// Trial division against the sieve's primes. The even part of `n` and all
/// multiplicities are discarded. Requires `sieve.limit^2 >= n` so any
/// cofactor surviving division by primes `<= sqrt(n)` is itself prime.
pub fn distinct_odd_prime_factors(n: u64, sieve: &PrimeSieve) -> Result<OddFactorSet> {
    if n < 2 {
        return Err(Error::invalid(format!("cannot factor {n}; need n >= 2")));
    }
    if sieve.limit.checked_mul(sieve.limit).map_or(false, |sq| sq < n) {
        return Err(Error::InsufficientSieve { n, limit: sieve.limit });
    }
    let mut m = n;
    while m % 2 == 0 {
        m /= 2;
    }
    let mut factors = Vec::new();
    for &p in sieve.primes().iter().skip(1) {
        if p * p > m {
            break;
        }
        if m % p == 0 {
            factors.push(p);
            while m % p == 0 {
                m /= p;
            }
        }
    }
    if m > 1 {
        factors.push(m);
    }
    Ok(OddFactorSet { n, factors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_is_prime(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn small_primes() {
        let s = PrimeSieve::build(10).unwrap();
        assert_eq!(s.primes(), &[2, 3, 5, 7]);
    }

    #[test]
    fn boundary_limit_two() {
        let s = PrimeSieve::build(2).unwrap();
        assert_eq!(s.primes(), &[2]);
        assert!(s.is_prime(2).unwrap());
    }

    #[test]
    fn limit_below_two_is_rejected() {
        assert!(matches!(PrimeSieve::build(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn membership_examples() {
        let s = PrimeSieve::build(100).unwrap();
        assert!(s.is_prime(97).unwrap());
        assert!(!s.is_prime(1).unwrap());
        assert!(!s.is_prime(91).unwrap()); // 7 * 13
        assert!(matches!(s.is_prime(101), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn agrees_with_trial_division_to_1e4() {
        let s = PrimeSieve::build(10_000).unwrap();
        for n in 0..=10_000u64 {
            assert_eq!(s.is_prime(n).unwrap(), naive_is_prime(n), "n = {n}");
        }
    }

    #[test]
    fn prime_list_matches_table() {
        let s = PrimeSieve::build(5000).unwrap();
        let from_table: Vec<u64> =
            (0..=5000).filter(|&i| s.is_prime(i).unwrap()).collect();
        assert_eq!(s.primes(), from_table.as_slice());
        assert!(s.primes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn build_is_deterministic() {
        let a = PrimeSieve::build(100_000).unwrap();
        let b = PrimeSieve::build(100_000).unwrap();
        assert_eq!(a.words, b.words);
        assert_eq!(a.primes, b.primes);
    }

    #[test]
    fn factor_examples() {
        let s = PrimeSieve::build(1000).unwrap();
        assert_eq!(distinct_odd_prime_factors(100, &s).unwrap().factors, vec![5]);
        assert_eq!(distinct_odd_prime_factors(1024, &s).unwrap().factors, Vec::<u64>::new());
        assert_eq!(distinct_odd_prime_factors(14, &s).unwrap().factors, vec![7]);
        // 3 * 5 * 7 * 2^2
        assert_eq!(distinct_odd_prime_factors(420, &s).unwrap().factors, vec![3, 5, 7]);
    }

    #[test]
    fn large_prime_cofactor_is_kept() {
        // 2 * 9973 with a sieve only up to 150: 150^2 >= 19946
        let s = PrimeSieve::build(150).unwrap();
        assert_eq!(distinct_odd_prime_factors(2 * 9973, &s).unwrap().factors, vec![9973]);
    }

    #[test]
    fn insufficient_sieve_is_reported() {
        let s = PrimeSieve::build(10).unwrap();
        assert!(matches!(
            distinct_odd_prime_factors(101, &s),
            Err(Error::InsufficientSieve { .. })
        ));
    }

    #[test]
    fn factor_round_trip_up_to_1e4() {
        // n / 2^v2(n) must equal the product of listed factors raised to the
        // multiplicity recovered by repeated division
        let s = PrimeSieve::build(10_000).unwrap();
        for n in (4..=10_000u64).step_by(2) {
            let mut odd_part = n;
            while odd_part % 2 == 0 {
                odd_part /= 2;
            }
            let mut rebuilt = 1u64;
            for &p in &distinct_odd_prime_factors(n, &s).unwrap().factors {
                let mut m = odd_part;
                while m % p == 0 {
                    rebuilt *= p;
                    m /= p;
                }
            }
            assert_eq!(rebuilt, odd_part, "n = {n}");
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sieve.bin");
        let s = PrimeSieve::build(12_345).unwrap();
        s.save_cache(&path).unwrap();
        let loaded = PrimeSieve::load_cache(&path).unwrap();
        assert_eq!(loaded.limit(), 12_345);
        assert_eq!(loaded.primes, s.primes);
        assert_eq!(loaded.words, s.words);
    }

    #[test]
    fn truncated_cache_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sieve.bin");
        let s = PrimeSieve::build(10_000).unwrap();
        s.save_cache(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(PrimeSieve::load_cache(&path), Err(Error::Parse { .. })));
    }
}
