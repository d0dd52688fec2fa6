//! Multi-base digit features.
//!
//! Each even number maps to 42 values: the 10 least significant digits in
//! bases 2, 3, 5 and 7 (least significant digit first), the number itself
//! normalized by the dataset maximum, and its natural log. Digits are fed
//! as raw numeric values, not one-hot. Note 2^10 = 1024, so the base-2
//! group only sees `n mod 1024`; the truncation is part of the encoding.

use crate::error::{Error, Result};
use std::fmt;

pub const FEATURE_BASES: [u8; 4] = [2, 3, 5, 7];
pub const DIGITS_PER_BASE: usize = 10;
pub const FEATURE_COUNT: usize = 42;

/// The 10 least significant digits of a number in one base, LSD first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaseDigits {
    base: u8,
    digits: [u8; DIGITS_PER_BASE],
}

/// `digits[i] = (n / base^i) mod base`.
pub fn base_digits(n: u64, base: u8) -> Result<BaseDigits> {
    if !FEATURE_BASES.contains(&base) {
        return Err(Error::invalid(format!("unsupported base {base} (expected 2, 3, 5 or 7)")));
    }
    let mut digits = [0u8; DIGITS_PER_BASE];
    let mut v = n;
    for d in digits.iter_mut() {
        *d = (v % base as u64) as u8;
        v /= base as u64;
    }
    Ok(BaseDigits { base, digits })
}

impl BaseDigits {
    pub fn base(&self) -> u8 {
        self.base
    }

    pub fn digits(&self) -> &[u8; DIGITS_PER_BASE] {
        &self.digits
    }

    /// Construct from explicit digit values (LSD first).
    pub fn from_digits(base: u8, digits: [u8; DIGITS_PER_BASE]) -> Result<Self> {
        if !FEATURE_BASES.contains(&base) {
            return Err(Error::invalid(format!("unsupported base {base}")));
        }
        if digits.iter().any(|&d| d >= base) {
            return Err(Error::invalid(format!("digit out of range for base {base}")));
        }
        Ok(BaseDigits { base, digits })
    }

    pub(crate) fn set_digit(&mut self, index: usize, value: u8) {
        debug_assert!(value < self.base);
        self.digits[index] = value;
    }
}

/// Digits of the represented value plus two, modulo base^10. Constant
/// amortized work: the carry chain almost always stops immediately.
pub fn increment_digits_by_two(d: &BaseDigits) -> BaseDigits {
    let base = d.base;
    let mut out = *d;
    let mut carry = 2u8;
    for digit in out.digits.iter_mut() {
        if carry == 0 {
            break;
        }
        let sum = *digit + carry;
        *digit = sum % base;
        carry = sum / base;
    }
    // overflow past the 10th digit wraps, matching arithmetic mod base^10
    out
}

/// Fixed 42-value feature layout for one even number.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.values
    }
}

/// Positions 0-9: base-2 digits (LSD first), 10-19 base 3, 20-29 base 5,
/// 30-39 base 7, 40: n / n_max, 41: ln n.
pub fn make_features(n: u64, n_max: u64) -> Result<FeatureVector> {
    if n < 4 || n % 2 != 0 || n > n_max {
        return Err(Error::invalid(format!(
            "features need even n with 4 <= n <= n_max ({n_max}), got {n}"
        )));
    }
    Ok(assemble_features(
        &FEATURE_BASES.map(|b| base_digits(n, b).expect("fixed bases")),
        n as f64 / n_max as f64,
        (n as f64).ln(),
    ))
}

/// Shared layout builder, also used by the digit search where the scalar
/// positions are anchored rather than derived from the digits.
pub(crate) fn assemble_features(
    digits: &[BaseDigits; 4],
    normalized: f64,
    log_n: f64,
) -> FeatureVector {
    let mut values = [0.0; FEATURE_COUNT];
    for (group, d) in digits.iter().enumerate() {
        for i in 0..DIGITS_PER_BASE {
            values[group * DIGITS_PER_BASE + i] = d.digits[i] as f64;
        }
    }
    values[40] = normalized;
    values[41] = log_n;
    FeatureVector { values }
}

/// Feature-group selection for ablation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureMask {
    pub include_base2: bool,
    pub include_base3: bool,
    pub include_base5: bool,
    pub include_base7: bool,
    pub include_number: bool,
    pub include_log: bool,
    /// Keep only digit position 0 of each enabled base.
    pub lsd_only: bool,
}

impl Default for FeatureMask {
    fn default() -> Self {
        Self::full()
    }
}

impl FeatureMask {
    pub fn full() -> Self {
        FeatureMask {
            include_base2: true,
            include_base3: true,
            include_base5: true,
            include_base7: true,
            include_number: true,
            include_log: true,
            lsd_only: false,
        }
    }

    fn without_base(base: u8) -> Self {
        let mut m = Self::full();
        match base {
            2 => m.include_base2 = false,
            3 => m.include_base3 = false,
            5 => m.include_base5 = false,
            7 => m.include_base7 = false,
            _ => unreachable!(),
        }
        m
    }

    /// The canonical named masks; `lsd-only` keeps the four least
    /// significant digits and drops both scalars.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "full" => Ok(Self::full()),
            "without-base2" => Ok(Self::without_base(2)),
            "without-base3" => Ok(Self::without_base(3)),
            "without-base5" => Ok(Self::without_base(5)),
            "without-base7" => Ok(Self::without_base(7)),
            "without-number" => Ok(FeatureMask { include_number: false, ..Self::full() }),
            "without-log" => Ok(FeatureMask { include_log: false, ..Self::full() }),
            "lsd-only" => Ok(FeatureMask {
                include_number: false,
                include_log: false,
                lsd_only: true,
                ..Self::full()
            }),
            other => Err(Error::invalid(format!("unknown feature mask `{other}`"))),
        }
    }

    /// Canonical name when this mask is one of the named eight.
    pub fn name(&self) -> String {
        for name in [
            "full",
            "without-base2",
            "without-base3",
            "without-base5",
            "without-base7",
            "without-number",
            "without-log",
            "lsd-only",
        ] {
            if Self::from_name(name).unwrap() == *self {
                return name.to_string();
            }
        }
        format!("{self:?}")
    }

    fn bases(&self) -> [bool; 4] {
        [self.include_base2, self.include_base3, self.include_base5, self.include_base7]
    }

    pub fn validate(&self) -> Result<()> {
        if self.bases().iter().any(|&b| b) || self.include_number || self.include_log {
            Ok(())
        } else {
            Err(Error::invalid("feature mask disables every group"))
        }
    }

    /// Width of the projected feature list.
    pub fn width(&self) -> usize {
        let per_base = if self.lsd_only { 1 } else { DIGITS_PER_BASE };
        let n_bases = self.bases().iter().filter(|&&b| b).count();
        n_bases * per_base + usize::from(self.include_number) + usize::from(self.include_log)
    }

    /// Project a full feature vector onto the enabled groups, preserving
    /// layout order (bases ascending, then number, then log).
    pub fn apply(&self, fv: &FeatureVector) -> Result<Vec<f64>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.width());
        let per_base = if self.lsd_only { 1 } else { DIGITS_PER_BASE };
        for (group, enabled) in self.bases().into_iter().enumerate() {
            if enabled {
                let start = group * DIGITS_PER_BASE;
                out.extend_from_slice(&fv.values[start..start + per_base]);
            }
        }
        if self.include_number {
            out.push(fv.values[40]);
        }
        if self.include_log {
            out.push(fv.values[41]);
        }
        Ok(out)
    }

    /// Pack the seven flags into one byte for the model file.
    pub(crate) fn to_byte(self) -> u8 {
        let bits = [
            self.include_base2,
            self.include_base3,
            self.include_base5,
            self.include_base7,
            self.include_number,
            self.include_log,
            self.lsd_only,
        ];
        bits.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << i))
    }

    pub(crate) fn from_byte(b: u8) -> Result<Self> {
        if b >> 7 != 0 {
            return Err(Error::ModelLoad(format!("invalid feature mask byte {b:#04x}")));
        }
        let bit = |i: u8| (b >> i) & 1 == 1;
        let mask = FeatureMask {
            include_base2: bit(0),
            include_base3: bit(1),
            include_base5: bit(2),
            include_base7: bit(3),
            include_number: bit(4),
            include_log: bit(5),
            lsd_only: bit(6),
        };
        mask.validate().map_err(|_| Error::ModelLoad("feature mask disables every group".into()))?;
        Ok(mask)
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Export rows of `n, <masked features>, g` for external inspection.
pub fn write_feature_csv<W: std::io::Write>(
    table: &crate::partitions::CometTable,
    indices: &[usize],
    mask: &FeatureMask,
    n_max: u64,
    w: &mut W,
) -> crate::error::Result<()> {
    mask.validate()?;
    write!(w, "n")?;
    for i in 0..mask.width() {
        write!(w, ",f{i}")?;
    }
    writeln!(w, ",g")?;
    for &i in indices {
        let rec = table.records()[i];
        let values = mask.apply(&make_features(rec.n, n_max)?)?;
        write!(w, "{}", rec.n)?;
        for v in values {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{}", rec.g)?;
    }
    Ok(())
}
