//! Adversarial digit search and integer realization.
//!
//! The hill climb treats the model's 40 digit features as a discrete
//! search space: sweep digits base-major (2, 3, 5, 7), least significant
//! digit first, setting each to the value that minimizes the prediction,
//! and repeat until a full sweep changes nothing. The two scalar features
//! stay anchored at the start number and its log throughout, so the final
//! candidate is a feature-space object; `crt_combine` bridges it back to
//! the smallest integer matching all four digit patterns.

use crate::error::{Error, Result};
use crate::features::{assemble_features, base_digits, BaseDigits, FEATURE_BASES, FEATURE_COUNT};
use crate::neuralnet::ModelBundle;
use crate::par;
use crate::partitions::count_partitions;
use crate::primes::PrimeSieve;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use std::io::Write;

/// Evens per scan chunk.
const SCAN_CHUNK: usize = 65_536;
/// A sweep bound only to catch runaway loops; the climb provably stops
/// long before this.
const MAX_SWEEPS: usize = 10_000;

/// One point of the digit search: four digit patterns plus the anchored
/// scalar features and the model's prediction for the assembled vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitCandidate {
    pub digits: [BaseDigits; 4],
    pub anchor_n: u64,
    pub anchor_log: f64,
    pub prediction: f64,
}

impl DigitCandidate {
    /// Assemble the 42-value layout with the anchored scalars.
    pub fn features(&self, n_max: u64) -> [f64; FEATURE_COUNT] {
        *assemble_features(
            &self.digits,
            self.anchor_n as f64 / n_max as f64,
            self.anchor_log,
        )
        .values()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillClimbStep {
    pub sweep: usize,
    pub digits_changed: usize,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HillClimbReport {
    /// One entry per sweep; predictions are non-increasing and the final
    /// sweep changes no digit.
    pub trajectory: Vec<HillClimbStep>,
    pub final_candidate: DigitCandidate,
}

impl HillClimbReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "sweep,digits_changed,prediction")?;
        for s in &self.trajectory {
            writeln!(w, "{},{},{}", s.sweep, s.digits_changed, s.prediction)?;
        }
        Ok(())
    }
}

/// Coordinate descent over digit values. Acceptance is strict improvement;
/// ties keep the current digit. With `even_constraint` the base-2 low bit
/// is pinned to 0.
pub fn hill_climb(
    model: &ModelBundle,
    start_n: u64,
    even_constraint: bool,
) -> Result<HillClimbReport> {
    if model.config().input_width != FEATURE_COUNT || model.mask != crate::features::FeatureMask::full()
    {
        return Err(Error::IncompatibleModel(format!(
            "digit search needs the full {FEATURE_COUNT}-feature layout, model has mask `{}` with width {}",
            model.mask.name(),
            model.config().input_width
        )));
    }
    if start_n < 4 {
        return Err(Error::invalid(format!("start number must be >= 4, got {start_n}")));
    }

    let digits = FEATURE_BASES.map(|b| base_digits(start_n, b).expect("fixed bases"));
    let mut candidate = DigitCandidate {
        digits,
        anchor_n: start_n,
        anchor_log: (start_n as f64).ln(),
        prediction: 0.0,
    };
    let score =
        |c: &DigitCandidate| -> Result<f64> { model.mlp.forward(&c.features(model.n_max)) };
    candidate.prediction = score(&candidate)?;

    let mut trajectory = Vec::new();
    for sweep in 1..=MAX_SWEEPS {
        let mut changed = 0usize;
        for (group, &base) in FEATURE_BASES.iter().enumerate() {
            for pos in 0..crate::features::DIGITS_PER_BASE {
                if even_constraint && base == 2 && pos == 0 {
                    continue;
                }
                let current = candidate.digits[group].digits()[pos];
                let mut best_value = current;
                let mut best_pred = candidate.prediction;
                for value in 0..base {
                    if value == current {
                        continue;
                    }
                    candidate.digits[group].set_digit(pos, value);
                    let pred = score(&candidate)?;
                    if pred < best_pred {
                        best_value = value;
                        best_pred = pred;
                    }
                }
                candidate.digits[group].set_digit(pos, best_value);
                candidate.prediction = best_pred;
                if best_value != current {
                    changed += 1;
                }
            }
        }
        trajectory.push(HillClimbStep {
            sweep,
            digits_changed: changed,
            prediction: candidate.prediction,
        });
        if changed == 0 {
            return Ok(HillClimbReport { trajectory, final_candidate: candidate });
        }
    }
    // unreachable in practice: each accepted change strictly decreases the
    // prediction over a finite space
    Err(Error::invalid(format!("hill climb did not settle within {MAX_SWEEPS} sweeps")))
}

/// Value of a digit pattern as a residue mod base^10.
pub fn residue_of(d: &BaseDigits) -> u64 {
    d.digits()
        .iter()
        .enumerate()
        .map(|(i, &digit)| digit as u64 * (d.base() as u64).pow(i as u32))
        .sum()
}

/// A solved congruence system.
#[derive(Debug, Clone, PartialEq)]
pub struct CrtResult {
    /// `(modulus, residue)` pairs the solution satisfies.
    pub residues: Vec<(u64, u64)>,
    pub modulus: BigUint,
    pub smallest_solution: BigUint,
}

impl CrtResult {
    /// Direct modular re-reduction of the solution against every pair.
    pub fn verify(&self) -> bool {
        self.residues.iter().all(|&(m, r)| self.solution_mod(m) == r)
            && self.smallest_solution < self.modulus
    }

    /// The solution reduced mod a small modulus.
    pub fn solution_mod(&self, modulus: u64) -> u64 {
        u64::try_from(&self.smallest_solution % BigUint::from(modulus))
            .expect("reduced below a u64 modulus")
    }

    /// Whether the solution exceeds 10^exp.
    pub fn exceeds_pow10(&self, exp: u32) -> bool {
        self.smallest_solution > BigUint::from(10u64).pow(exp)
    }
}

/// Solve `x = r_i (mod m_i)` for pairwise coprime moduli; returns the
/// smallest nonnegative solution.
pub fn crt(pairs: &[(u64, u64)]) -> Result<CrtResult> {
    if pairs.is_empty() {
        return Err(Error::invalid("crt needs at least one congruence"));
    }
    for &(m, r) in pairs {
        if m == 0 || r >= m {
            return Err(Error::invalid(format!("residue {r} is not reduced mod {m}")));
        }
    }
    for (i, &(mi, _)) in pairs.iter().enumerate() {
        for &(mj, _) in &pairs[i + 1..] {
            if mi.gcd(&mj) != 1 {
                return Err(Error::invalid(format!("moduli {mi} and {mj} are not coprime")));
            }
        }
    }
    let modulus: BigUint = pairs.iter().map(|&(m, _)| BigUint::from(m)).product();
    let mut acc = BigUint::ZERO;
    for &(m, r) in pairs {
        let m_big = BigInt::from(m);
        let partial = BigInt::from(modulus.clone()) / &m_big;
        let gcd = partial.extended_gcd(&m_big);
        // partial * x == 1 (mod m); normalize the inverse into [0, m)
        let inverse = ((gcd.x % &m_big) + &m_big) % &m_big;
        let term = (BigInt::from(r) * inverse % &m_big) * partial;
        acc += term.to_biguint().expect("all factors nonnegative");
    }
    let smallest_solution = acc % &modulus;
    Ok(CrtResult {
        residues: pairs.to_vec(),
        modulus,
        smallest_solution,
    })
}

/// Realize a digit candidate: the unique smallest integer congruent to all
/// four patterns mod base^10.
pub fn crt_combine(candidate: &DigitCandidate) -> CrtResult {
    let pairs: Vec<(u64, u64)> = candidate
        .digits
        .iter()
        .map(|d| ((d.base() as u64).pow(10), residue_of(d)))
        .collect();
    let result = crt(&pairs).expect("base^10 moduli are pairwise coprime");
    debug_assert!(result.verify());
    result
}

/// The exhaustive fallback the CRT replaces: walk numbers matching the
/// highest-base pattern and return the first that satisfies the rest, or
/// `None` if none exists up to `bound`. Kept for methodological
/// comparison; the CRT answer is exact and instant.
pub fn realize_by_enumeration(candidate: &DigitCandidate, bound: u64) -> Option<u64> {
    let pairs: Vec<(u64, u64)> = candidate
        .digits
        .iter()
        .map(|d| ((d.base() as u64).pow(10), residue_of(d)))
        .collect();
    let (step, start) = *pairs.last().expect("four bases");
    let mut x = start;
    while x <= bound {
        if pairs[..pairs.len() - 1].iter().all(|&(m, r)| x % m == r) {
            return Some(x);
        }
        match x.checked_add(step) {
            Some(next) => x = next,
            None => return None,
        }
    }
    None
}

/// A low-prediction even number with its exact count when available.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanHit {
    pub n: u64,
    pub prediction: f64,
    pub true_g: Option<u64>,
}

/// The `k` evens in `[lo, hi]` with the lowest predictions, ascending by
/// prediction with ties broken by smaller n. When a sieve covering `n` is
/// supplied, each hit carries its exact count.
pub fn scan_suspicious(
    model: &ModelBundle,
    lo: u64,
    hi: u64,
    k: usize,
    sieve: Option<&PrimeSieve>,
) -> Result<Vec<ScanHit>> {
    if lo < 4 || lo % 2 != 0 || hi % 2 != 0 || lo > hi {
        return Err(Error::invalid(format!("need even 4 <= lo <= hi, got [{lo}, {hi}]")));
    }
    if hi > model.n_max {
        return Err(Error::out_of_range(format!(
            "scan end {hi} exceeds the model's n_max {}",
            model.n_max
        )));
    }
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    let count = ((hi - lo) / 2 + 1) as usize;
    let k = k.min(count);

    let ordering = |a: &(f64, u64), b: &(f64, u64)| {
        a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1))
    };
    // per-chunk top-k, merged in chunk order
    let chunk_tops = par::map_chunks(count, SCAN_CHUNK, |range| -> Result<Vec<(f64, u64)>> {
        let ns: Vec<u64> = range.map(|i| lo + 2 * i as u64).collect();
        let preds = model.predict_batch(&ns)?;
        let mut scored: Vec<(f64, u64)> =
            preds.into_iter().zip(ns).collect();
        scored.sort_unstable_by(ordering);
        scored.truncate(k);
        Ok(scored)
    });
    let mut merged: Vec<(f64, u64)> = Vec::new();
    for top in chunk_tops {
        merged.extend(top?);
    }
    merged.sort_unstable_by(ordering);
    merged.truncate(k);

    merged
        .into_iter()
        .map(|(prediction, n)| {
            let true_g = match sieve {
                Some(s) if n <= s.limit() => Some(count_partitions(n, s)?),
                _ => None,
            };
            Ok(ScanHit { n, prediction, true_g })
        })
        .collect()
}

pub fn write_scan_csv<W: Write>(hits: &[ScanHit], w: &mut W) -> Result<()> {
    writeln!(w, "n,prediction,true_g")?;
    for h in hits {
        match h.true_g {
            Some(g) => writeln!(w, "{},{},{}", h.n, h.prediction, g)?,
            None => writeln!(w, "{},{},", h.n, h.prediction)?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMask;
    use crate::neuralnet::{Activation, Mlp, MlpConfig};
    use ndarray::{Array1, Array2};
    use proptest::prelude::*;

    /// A linear model with chosen weights over the 42 features.
    fn linear_bundle(weights: [f64; FEATURE_COUNT], bias: f64, n_max: u64) -> ModelBundle {
        let config = MlpConfig {
            input_width: FEATURE_COUNT,
            hidden_layers: 0,
            hidden_width: 1,
            activation: Activation::Relu,
            init_seed: 0,
        };
        let mut mlp = Mlp::init(&config).unwrap();
        mlp.layers_mut()[0].weights = Array2::from_shape_vec((1, FEATURE_COUNT), weights.to_vec()).unwrap();
        mlp.layers_mut()[0].bias = Array1::from(vec![bias]);
        ModelBundle::new(mlp, FeatureMask::full(), n_max).unwrap()
    }

    #[test]
    fn constant_model_changes_nothing() {
        let bundle = linear_bundle([0.0; FEATURE_COUNT], 17.0, 1_000_000);
        let report = hill_climb(&bundle, 1_000_000, true).unwrap();
        assert_eq!(report.trajectory.len(), 1);
        assert_eq!(report.trajectory[0].digits_changed, 0);
        assert_eq!(report.final_candidate.prediction, 17.0);
        // digits still encode the start number
        for (group, base) in FEATURE_BASES.iter().enumerate() {
            assert_eq!(
                report.final_candidate.digits[group],
                base_digits(1_000_000, *base).unwrap()
            );
        }
    }

    #[test]
    fn digit_sum_objective_drives_digits_to_zero() {
        let mut w = [0.0; FEATURE_COUNT];
        w[..40].fill(1.0); // prediction = sum of digit values
        let bundle = linear_bundle(w, 0.0, 1_000_000);
        let report = hill_climb(&bundle, 999_998, true).unwrap();
        let c = &report.final_candidate;
        for d in &c.digits {
            assert!(d.digits().iter().all(|&v| v == 0));
        }
        assert_eq!(c.prediction, 0.0);
        assert_eq!(report.trajectory.last().unwrap().digits_changed, 0);
    }

    #[test]
    fn negated_objective_drives_digits_to_max() {
        let mut w = [0.0; FEATURE_COUNT];
        w[..40].fill(-1.0);
        let bundle = linear_bundle(w, 0.0, 1_000_000);
        let report = hill_climb(&bundle, 1_000_000, true).unwrap();
        for (group, &base) in FEATURE_BASES.iter().enumerate() {
            let digits = report.final_candidate.digits[group].digits();
            for (pos, &v) in digits.iter().enumerate() {
                if base == 2 && pos == 0 {
                    assert_eq!(v, 0, "even constraint pins the low bit");
                } else {
                    assert_eq!(v, base - 1);
                }
            }
        }
    }

    #[test]
    fn even_constraint_can_be_disabled() {
        let mut w = [0.0; FEATURE_COUNT];
        w[..40].fill(-1.0);
        let bundle = linear_bundle(w, 0.0, 1_000_000);
        let report = hill_climb(&bundle, 1_000_000, false).unwrap();
        assert_eq!(report.final_candidate.digits[0].digits()[0], 1);
    }

    #[test]
    fn trajectory_is_non_increasing() {
        // a bumpy but deterministic objective
        let mut w = [0.0; FEATURE_COUNT];
        for (i, v) in w.iter_mut().enumerate().take(40) {
            *v = if i % 3 == 0 { 2.5 } else { -1.5 };
        }
        let bundle = linear_bundle(w, 3.0, 1_000_000);
        let report = hill_climb(&bundle, 123_456, true).unwrap();
        let preds: Vec<f64> = report.trajectory.iter().map(|s| s.prediction).collect();
        assert!(preds.windows(2).all(|p| p[1] <= p[0]), "{preds:?}");
        assert!(report.trajectory.len() < MAX_SWEEPS);
    }

    #[test]
    fn masked_model_is_rejected() {
        let mask = FeatureMask::from_name("without-base3").unwrap();
        let config = MlpConfig {
            input_width: mask.width(),
            hidden_layers: 0,
            hidden_width: 1,
            activation: Activation::Relu,
            init_seed: 0,
        };
        let bundle = ModelBundle::new(Mlp::init(&config).unwrap(), mask, 1000).unwrap();
        assert!(matches!(
            hill_climb(&bundle, 1000, true),
            Err(Error::IncompatibleModel(_))
        ));
    }

    #[test]
    fn residue_examples() {
        let d = BaseDigits::from_digits(5, [4, 1, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(residue_of(&d), 9);
        let zero = BaseDigits::from_digits(7, [0; 10]).unwrap();
        assert_eq!(residue_of(&zero), 0);
        for n in (0..1_000_000u64).step_by(99_991) {
            for base in FEATURE_BASES {
                let d = base_digits(n, base).unwrap();
                assert_eq!(residue_of(&d), n % (base as u64).pow(10));
            }
        }
    }

    #[test]
    fn crt_truncated_example() {
        let result = crt(&[(2, 0), (3, 2), (5, 4)]).unwrap();
        assert_eq!(result.smallest_solution, BigUint::from(14u32));
        assert_eq!(result.modulus, BigUint::from(30u32));
        assert!(result.verify());
    }

    #[test]
    fn crt_single_pair_is_identity() {
        let result = crt(&[(59_049, 44_363)]).unwrap();
        assert_eq!(result.smallest_solution, BigUint::from(44_363u32));
    }

    #[test]
    fn crt_rejects_bad_systems() {
        assert!(crt(&[]).is_err());
        assert!(crt(&[(4, 1), (6, 1)]).is_err()); // gcd 2
        assert!(crt(&[(3, 5)]).is_err()); // unreduced residue
    }

    #[test]
    fn crt_combine_matches_digits() {
        let candidate = DigitCandidate {
            digits: FEATURE_BASES.map(|b| base_digits(123_456, b).unwrap()),
            anchor_n: 123_456,
            anchor_log: (123_456f64).ln(),
            prediction: 0.0,
        };
        let result = crt_combine(&candidate);
        assert!(result.verify());
        // digits came from a real number below every base^10 except 2^10,
        // so the solution reduces to it mod each modulus
        assert_eq!(
            &result.smallest_solution % BigUint::from(59_049u32),
            BigUint::from(123_456u64 % 59_049)
        );
        let even = &result.smallest_solution % BigUint::from(2u32);
        assert_eq!(even, BigUint::ZERO);
    }

    #[test]
    fn enumeration_agrees_with_crt_when_in_reach() {
        let candidate = DigitCandidate {
            digits: FEATURE_BASES.map(|b| base_digits(700_000, b).unwrap()),
            anchor_n: 700_000,
            anchor_log: (700_000f64).ln(),
            prediction: 0.0,
        };
        let result = crt_combine(&candidate);
        // the true solution here is 700000 itself (below 3^10? no, but the
        // CRT solution is some value < 210^10) — enumerate far enough
        let solution = result.smallest_solution.to_string().parse::<u64>();
        if let Ok(x) = solution {
            assert_eq!(realize_by_enumeration(&candidate, x + 1), Some(x));
        }
    }

    proptest! {
        #[test]
        fn crt_solution_satisfies_all_residues(n in 4u64..u64::MAX / 4) {
            let candidate = DigitCandidate {
                digits: FEATURE_BASES.map(|b| base_digits(n, b).unwrap()),
                anchor_n: 4,
                anchor_log: 4f64.ln(),
                prediction: 0.0,
            };
            let result = crt_combine(&candidate);
            prop_assert!(result.verify());
            for d in &candidate.digits {
                let m = BigUint::from((d.base() as u64).pow(10));
                prop_assert_eq!(
                    &result.smallest_solution % &m,
                    BigUint::from(residue_of(d))
                );
            }
        }
    }

    #[test]
    fn scan_orders_by_prediction_then_n() {
        // prediction = n/n_max: ascending in n, so top-k are the smallest n
        let mut w = [0.0; FEATURE_COUNT];
        w[40] = 1.0;
        let bundle = linear_bundle(w, 0.0, 10_000);
        let hits = scan_suspicious(&bundle, 4, 1000, 5, None).unwrap();
        let ns: Vec<u64> = hits.iter().map(|h| h.n).collect();
        assert_eq!(ns, vec![4, 6, 8, 10, 12]);

        // constant model: tie-break by smaller n
        let flat = linear_bundle([0.0; FEATURE_COUNT], 1.0, 10_000);
        let hits = scan_suspicious(&flat, 100, 200, 3, None).unwrap();
        let ns: Vec<u64> = hits.iter().map(|h| h.n).collect();
        assert_eq!(ns, vec![100, 102, 104]);
    }

    #[test]
    fn scan_k_covering_range_returns_everything_sorted() {
        let mut w = [0.0; FEATURE_COUNT];
        w[40] = -1.0; // descending in n
        let bundle = linear_bundle(w, 0.0, 10_000);
        let hits = scan_suspicious(&bundle, 4, 24, 100, None).unwrap();
        assert_eq!(hits.len(), 11);
        assert!(hits.windows(2).all(|h| h[0].prediction <= h[1].prediction));
        assert_eq!(hits[0].n, 24);
    }

    #[test]
    fn scan_reports_true_counts_within_sieve() {
        let sieve = PrimeSieve::build(1000).unwrap();
        let bundle = linear_bundle([0.0; FEATURE_COUNT], 0.0, 10_000);
        let hits = scan_suspicious(&bundle, 96, 104, 5, Some(&sieve)).unwrap();
        let by_n: std::collections::HashMap<u64, Option<u64>> =
            hits.iter().map(|h| (h.n, h.true_g)).collect();
        assert_eq!(by_n[&100], Some(6));
        assert_eq!(by_n[&98], Some(3));
    }

    #[test]
    fn scan_rejects_bad_ranges() {
        let bundle = linear_bundle([0.0; FEATURE_COUNT], 0.0, 10_000);
        assert!(scan_suspicious(&bundle, 10, 4, 1, None).is_err());
        assert!(scan_suspicious(&bundle, 5, 9, 1, None).is_err());
        assert!(scan_suspicious(&bundle, 4, 10, 0, None).is_err());
        assert!(scan_suspicious(&bundle, 4, 20_000, 1, None).is_err());
    }
}
