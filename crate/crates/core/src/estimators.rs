//! Analytic approximations of the Goldbach function.
//!
//! Four closed-form estimates plus a scaled lower bound:
//!
//! * `g1`: 2 C2 * n / (ln n)^2 * prod over odd primes p | n of (p-1)/(p-2)
//! * `g2`: (3/5) g1
//! * `g3`: n / (ln n)^2
//! * `g4`: n / (ln (n/2))^2
//! * `lower_bound`: (2/3) g1
//!
//! The singular-series product runs over *distinct odd* primes only:
//! (p-1)/(p-2) is undefined at p = 2, and every n here is even.

use crate::error::{Error, Result};
use crate::primes::{OddFactorSet, PrimeSieve};
use std::str::FromStr;
use std::sync::OnceLock;

/// Truncation used for the cached process-wide constant. The truncated
/// product converges like 1/(L ln L); 1e7 brings it within 4e-9 of the
/// full constant, 1e6 only within ~4.5e-8.
pub const STANDARD_C2_TRUNCATION: u64 = 10_000_000;

/// Truncated twin prime constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinPrimeConstant {
    value: f64,
    truncation_limit: u64,
}

impl TwinPrimeConstant {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn truncation_limit(&self) -> u64 {
        self.truncation_limit
    }

    /// Process-wide cached constant at [`STANDARD_C2_TRUNCATION`].
    pub fn standard() -> &'static TwinPrimeConstant {
        static C2: OnceLock<TwinPrimeConstant> = OnceLock::new();
        C2.get_or_init(|| {
            twin_prime_constant(STANDARD_C2_TRUNCATION).expect("fixed truncation is valid")
        })
    }
}

/// Product over odd primes `p <= truncation_limit` of `1 - 1/(p-1)^2`.
pub fn twin_prime_constant(truncation_limit: u64) -> Result<TwinPrimeConstant> {
    if truncation_limit < 3 {
        return Err(Error::invalid(format!(
            "truncation limit must be >= 3, got {truncation_limit}"
        )));
    }
    let sieve = PrimeSieve::build(truncation_limit)?;
    let mut value = 1.0;
    for &p in sieve.primes().iter().skip(1) {
        let d = (p - 1) as f64;
        value *= 1.0 - 1.0 / (d * d);
    }
    Ok(TwinPrimeConstant { value, truncation_limit })
}

fn check_even(n: u64, min: u64) -> Result<f64> {
    if n < min || n % 2 != 0 {
        return Err(Error::invalid(format!("estimator needs even n >= {min}, got {n}")));
    }
    Ok(n as f64)
}

/// Hardy-Littlewood style estimate with the singular-series factor.
pub fn g1(n: u64, factors: &OddFactorSet, c2: &TwinPrimeConstant) -> Result<f64> {
    let x = check_even(n, 4)?;
    if factors.n != n {
        return Err(Error::invalid(format!(
            "factor set is for {} but n is {n}",
            factors.n
        )));
    }
    let ln = x.ln();
    let mut product = 1.0;
    for &p in &factors.factors {
        product *= (p - 1) as f64 / (p - 2) as f64;
    }
    Ok(2.0 * c2.value * x / (ln * ln) * product)
}

/// 3/5 of [`g1`].
pub fn g2(n: u64, factors: &OddFactorSet, c2: &TwinPrimeConstant) -> Result<f64> {
    Ok(0.6 * g1(n, factors, c2)?)
}

/// `n / (ln n)^2`; needs no factorization.
pub fn g3(n: u64) -> Result<f64> {
    let x = check_even(n, 4)?;
    let ln = x.ln();
    Ok(x / (ln * ln))
}

/// `n / (ln (n/2))^2`; needs no factorization.
pub fn g4(n: u64) -> Result<f64> {
    let x = check_even(n, 6)?;
    let ln = (x / 2.0).ln();
    Ok(x / (ln * ln))
}

/// 2/3 of [`g1`].
pub fn lower_bound(n: u64, factors: &OddFactorSet, c2: &TwinPrimeConstant) -> Result<f64> {
    Ok(g1(n, factors, c2)? * (2.0 / 3.0))
}

/// Estimator selected by name on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    G1,
    G2,
    G3,
    G4,
    LowerBound,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::G1 => "g1",
            EstimatorKind::G2 => "g2",
            EstimatorKind::G3 => "g3",
            EstimatorKind::G4 => "g4",
            EstimatorKind::LowerBound => "lb",
        }
    }

    /// Whether evaluating this estimator needs the odd prime factors of n.
    pub fn requires_factorization(&self) -> bool {
        matches!(self, EstimatorKind::G1 | EstimatorKind::G2 | EstimatorKind::LowerBound)
    }

    pub fn evaluate(
        &self,
        n: u64,
        sieve: &PrimeSieve,
        c2: &TwinPrimeConstant,
    ) -> Result<f64> {
        match self {
            EstimatorKind::G3 => g3(n),
            EstimatorKind::G4 => g4(n),
            _ => {
                let factors = crate::primes::distinct_odd_prime_factors(n, sieve)?;
                match self {
                    EstimatorKind::G1 => g1(n, &factors, c2),
                    EstimatorKind::G2 => g2(n, &factors, c2),
                    EstimatorKind::LowerBound => lower_bound(n, &factors, c2),
                    _ => unreachable!(),
                }
            }
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g1" => Ok(EstimatorKind::G1),
            "g2" => Ok(EstimatorKind::G2),
            "g3" => Ok(EstimatorKind::G3),
            "g4" => Ok(EstimatorKind::G4),
            "lb" => Ok(EstimatorKind::LowerBound),
            other => Err(Error::invalid(format!(
                "unknown estimator `{other}` (expected g1|g2|g3|g4|lb)"
            ))),
        }
    }
}
