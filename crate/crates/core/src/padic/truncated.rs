use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use super::{PAdicRational, Prime, Valuation};
use crate::error::{Error, Result};

/// A p-adic number known modulo `p^N`.
///
/// Stores digits `d_v, ..., d_{N-1}` (little-endian by index) with every
/// digit in `[0, p)`. A nonzero value has `d_v != 0`, so `|x|_p = p^{-v}`
/// is exact. A value that is zero modulo `p^N` is stored as the single digit
/// `d_{N-1} = 0`. Negative numbers use complement digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruncatedPAdic {
    p: Prime,
    low: i64,
    digits: Vec<u32>,
}

impl TruncatedPAdic {
    pub fn zero(p: Prime, precision: i64) -> Self {
        TruncatedPAdic {
            p,
            low: precision - 1,
            digits: vec![0],
        }
    }

    /// Builds from explicit digits starting at index `low`; leading zero
    /// digits are absorbed into the valuation.
    pub fn from_digits(p: Prime, low: i64, digits: Vec<u32>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::EmptyWindow {
                valuation: low,
                precision: low,
            });
        }
        if let Some(d) = digits.iter().find(|&&d| d >= p.get()) {
            return Err(Error::Parse(format!("digit {d} out of range for p = {p}")));
        }
        let mut x = TruncatedPAdic { p, low, digits };
        x.normalize();
        Ok(x)
    }

    /// Digit expansion of an exact `x ∈ Z[1/p]` up to index `precision - 1`.
    ///
    /// Fails with an empty window when `x != 0` and `v_p(x) ≥ precision`.
    pub fn from_rational(x: &PAdicRational, precision: i64) -> Result<Self> {
        match x.valuation() {
            Valuation::Infinite => Ok(Self::zero(x.prime(), precision)),
            Valuation::Finite(v) if v >= precision => Err(Error::EmptyWindow {
                valuation: v,
                precision,
            }),
            Valuation::Finite(_) => Ok(Self::reduce(x, precision)),
        }
    }

    /// Like [`from_rational`](Self::from_rational) but maps values with
    /// `v_p(x) ≥ precision` to the zero representation.
    pub fn reduce(x: &PAdicRational, precision: i64) -> Self {
        let (unit, v) = x.unit_part();
        if unit.is_zero() || v >= precision {
            return Self::zero(x.prime(), precision);
        }
        Self::from_scaled(x.prime(), v, &unit, precision)
    }

    /// The value `a · p^low` reduced modulo `p^precision`.
    pub(crate) fn from_scaled(p: Prime, low: i64, a: &BigInt, precision: i64) -> Self {
        if precision <= low {
            return Self::zero(p, precision);
        }
        let width = (precision - low) as u32;
        let mut r = a.mod_floor(&p.pow(width));
        let pb = p.to_bigint();
        let mut digits = Vec::with_capacity(width as usize);
        for _ in 0..width {
            let (q, d) = r.div_rem(&pb);
            digits.push(d.to_u32().unwrap_or(0));
            r = q;
        }
        let mut x = TruncatedPAdic { p, low, digits };
        x.normalize();
        x
    }

    fn normalize(&mut self) {
        let lead = self.digits.iter().take_while(|&&d| d == 0).count();
        if lead == self.digits.len() {
            let precision = self.precision();
            *self = Self::zero(self.p, precision);
        } else if lead > 0 {
            self.digits.drain(..lead);
            self.low += lead as i64;
        }
    }

    /// The integer `A` with `x ≡ A · p^base (mod p^N)`; requires `base ≤ low`.
    pub(crate) fn to_scaled(&self, base: i64) -> BigInt {
        debug_assert!(base <= self.low);
        let pb = self.p.to_bigint();
        let mut a = BigInt::zero();
        for &d in self.digits.iter().rev() {
            a = a * &pb + d;
        }
        a * self.p.pow((self.low - base) as u32)
    }

    #[inline]
    pub fn prime(&self) -> Prime {
        self.p
    }

    /// `N`: the value is known modulo `p^N`.
    pub fn precision(&self) -> i64 {
        self.low + self.digits.len() as i64
    }

    /// Lowest stored index `v`.
    pub fn low(&self) -> i64 {
        self.low
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn is_zero(&self) -> bool {
        self.digits == [0]
    }

    /// `v_p(x)`, or `None` when `x ≡ 0 (mod p^N)` and the valuation is only
    /// known to be at least `N`.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.low)
        }
    }

    /// Digit at index `i`, or `None` if `i` is beyond the precision.
    pub fn digit(&self, i: i64) -> Option<u32> {
        if i >= self.precision() {
            None
        } else if i < self.low {
            Some(0)
        } else {
            Some(self.digits[(i - self.low) as usize])
        }
    }

    /// `|x|_p ≤ 1`, i.e. `x ∈ Z_p`.
    pub fn is_integral(&self) -> bool {
        self.valuation().map_or(true, |v| v >= 0)
    }

    /// Multiplication by `p^m`. Exact: the precision moves with the digits.
    pub fn shift(&self, m: i64) -> Self {
        TruncatedPAdic {
            p: self.p,
            low: self.low + m,
            digits: self.digits.clone(),
        }
    }

    /// Sum modulo `p^min(N_x, N_y)`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.p.ensure_same(other.p)?;
        let precision = self.precision().min(other.precision());
        let base = self.low.min(other.low);
        let a = self.to_scaled(base) + other.to_scaled(base);
        Ok(Self::from_scaled(self.p, base, &a, precision))
    }

    /// `x + k` for exact `k ∈ Z[1/p]`; the precision of `x` is kept.
    pub fn add_rational(&self, k: &PAdicRational) -> Result<Self> {
        self.p.ensure_same(k.prime())?;
        let precision = self.precision();
        let (unit, v) = k.unit_part();
        if unit.is_zero() || v >= precision {
            return Ok(self.clone());
        }
        let base = self.low.min(v);
        let a = self.to_scaled(base) + unit * self.p.pow((v - base) as u32);
        Ok(Self::from_scaled(self.p, base, &a, precision))
    }

    /// `-x` modulo `p^N`.
    pub fn neg(&self) -> Self {
        let a = -self.to_scaled(self.low);
        Self::from_scaled(self.p, self.low, &a, self.precision())
    }

    /// Splits `x = α(x) + (x - α(x))` with `α(x) ∈ [0,1) ∩ Z[1/p]` and the
    /// remainder in `Z_p`.
    ///
    /// All negative-index digits must be known and at least digit 0 of the
    /// integral part, so the precision must be at least 1.
    pub fn split_frac(&self) -> Result<(PAdicRational, TruncatedPAdic)> {
        let precision = self.precision();
        if precision < 1 {
            return Err(Error::InsufficientPrecision {
                needed: 1,
                available: precision,
            });
        }
        if self.low >= 0 {
            return Ok((PAdicRational::zero(self.p), self.clone()));
        }
        let split = (-self.low) as usize;
        let pb = self.p.to_bigint();
        let mut num = BigInt::zero();
        for &d in self.digits[..split].iter().rev() {
            num = num * &pb + d;
        }
        let alpha = PAdicRational::new(self.p, num, split as u32);
        let mut int = TruncatedPAdic {
            p: self.p,
            low: 0,
            digits: self.digits[split..].to_vec(),
        };
        int.normalize();
        Ok((alpha, int))
    }

    /// `α(x)`: requires every digit below index 0.
    pub fn frac_part(&self) -> Result<PAdicRational> {
        if self.precision() < 0 {
            return Err(Error::InsufficientPrecision {
                needed: 0,
                available: self.precision(),
            });
        }
        if self.low >= 0 {
            return Ok(PAdicRational::zero(self.p));
        }
        let split = ((-self.low) as usize).min(self.digits.len());
        let pb = self.p.to_bigint();
        let mut num = BigInt::zero();
        for &d in self.digits[..split].iter().rev() {
            num = num * &pb + d;
        }
        Ok(PAdicRational::new(self.p, num, (-self.low) as u32))
    }

    /// The canonical exact representative `Σ d_i p^i` (non-negative).
    pub fn to_rational(&self) -> PAdicRational {
        if self.is_zero() {
            return PAdicRational::zero(self.p);
        }
        let a = self.to_scaled(self.low);
        PAdicRational::from_bigint(self.p, a).mul_by_power(self.low)
    }

    /// True when `self` and `other` agree modulo `p^min(N_x, N_y)`.
    pub fn agrees_with(&self, other: &Self) -> bool {
        if self.p != other.p {
            return false;
        }
        let precision = self.precision().min(other.precision());
        let lo = self.low.min(other.low).min(precision - 1);
        (lo..precision).all(|i| self.digit(i) == other.digit(i))
    }

    /// Truncation to a lower precision.
    pub fn with_precision(&self, precision: i64) -> Self {
        if precision >= self.precision() {
            return self.clone();
        }
        if precision <= self.low {
            return Self::zero(self.p, precision);
        }
        let mut x = TruncatedPAdic {
            p: self.p,
            low: self.low,
            digits: self.digits[..(precision - self.low) as usize].to_vec(),
        };
        x.normalize();
        x
    }

    /// The digit list as a comma-separated string, e.g. `1,0,1`.
    pub fn digit_string(&self) -> String {
        self.digits
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `p=<p> v=<v> digits=<d_v,...,d_{N-1}>`
impl fmt::Display for TruncatedPAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p={} v={} digits={}",
            self.p,
            self.low,
            self.digit_string()
        )
    }
}

impl FromStr for TruncatedPAdic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("cannot parse `{s}` as a truncated p-adic"));
        let mut p = None;
        let mut low = None;
        let mut digits = None;
        for field in s.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(bad)?;
            match key {
                "p" => p = Some(Prime::new(value.parse().map_err(|_| bad())?)?),
                "v" => low = Some(value.parse::<i64>().map_err(|_| bad())?),
                "digits" => {
                    let ds = value
                        .split(',')
                        .map(|d| d.trim().parse::<u32>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad())?;
                    digits = Some(ds);
                }
                _ => return Err(bad()),
            }
        }
        match (p, low, digits) {
            (Some(p), Some(low), Some(digits)) => Self::from_digits(p, low, digits),
            _ => Err(bad()),
        }
    }
}
