//! Exact arithmetic on `Z[1/p]` and finite-precision arithmetic on `Q_p`.
//!
//! [`PAdicRational`] holds numbers `n / p^e` exactly; these are the
//! translation parts of `BS(1,p)` and are simultaneously real numbers and
//! p-adic numbers. [`TruncatedPAdic`] holds a p-adic number known modulo
//! `p^N`, which is how boundary points of the walk are represented.

mod rational;
mod truncated;

pub use rational::PAdicRational;
pub use truncated::TruncatedPAdic;

use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated prime `p ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Prime(u32);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if p < 2 || p > u32::MAX as u64 || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Prime(p as u32))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    pub fn to_bigint(self) -> BigInt {
        BigInt::from(self.0)
    }

    /// `p^k` as a big integer.
    pub fn pow(self, k: u32) -> BigInt {
        num_traits::pow(self.to_bigint(), k as usize)
    }

    pub fn ln(self) -> f64 {
        (self.0 as f64).ln()
    }

    pub(crate) fn ensure_same(self, other: Prime) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::PrimeMismatch {
                left: self.0,
                right: other.0,
            })
        }
    }
}

impl TryFrom<u32> for Prime {
    type Error = Error;

    fn try_from(p: u32) -> Result<Self> {
        Prime::new(p as u64)
    }
}

impl From<Prime> for u32 {
    fn from(p: Prime) -> u32 {
        p.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// p-adic valuation of an exact number; zero has infinite valuation.
///
/// The derived order puts `Infinite` above every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_are_validated() {
        for p in [2u64, 3, 5, 7, 11, 13, 101, 7919] {
            assert!(Prime::new(p).is_ok(), "{p}");
        }
        for n in [0u64, 1, 4, 6, 9, 15, 7917] {
            assert_eq!(Prime::new(n), Err(Error::NotPrime(n)));
        }
    }

    #[test]
    fn infinite_valuation_dominates() {
        assert!(Valuation::Infinite > Valuation::Finite(i64::MAX));
        assert!(Valuation::Finite(-3) < Valuation::Finite(2));
    }
}
