use std::cmp::Ordering;
use std::fmt;
use std::ops::Neg;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Prime, Valuation};
use crate::error::{Error, Result};

/// An exact element `n / p^e` of `Z[1/p]`.
///
/// Always canonical: either `e = 0`, or `p` does not divide `n`. Zero is
/// stored as `0 / p^0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PAdicRational {
    p: Prime,
    num: BigInt,
    exp: u32,
}

impl PAdicRational {
    pub fn new(p: Prime, num: BigInt, exp: u32) -> Self {
        let mut x = PAdicRational { p, num, exp };
        x.canonicalize();
        x
    }

    pub fn from_int(p: Prime, n: i64) -> Self {
        PAdicRational {
            p,
            num: BigInt::from(n),
            exp: 0,
        }
    }

    pub fn from_bigint(p: Prime, n: BigInt) -> Self {
        PAdicRational { p, num: n, exp: 0 }
    }

    pub fn zero(p: Prime) -> Self {
        Self::from_int(p, 0)
    }

    pub fn one(p: Prime) -> Self {
        Self::from_int(p, 1)
    }

    /// Converts an exact rational whose reduced denominator is a power of `p`.
    pub fn from_ratio(p: Prime, r: &BigRational) -> Result<Self> {
        let mut den = r.denom().clone();
        let pb = p.to_bigint();
        let mut exp = 0u32;
        while !den.is_one() {
            let (q, rem) = den.div_rem(&pb);
            if !rem.is_zero() {
                return Err(Error::Parse(format!(
                    "{r} has a denominator that is not a power of {p}"
                )));
            }
            den = q;
            exp += 1;
        }
        Ok(Self::new(p, r.numer().clone(), exp))
    }

    fn canonicalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let pb = self.p.to_bigint();
        while self.exp > 0 {
            let (q, r) = self.num.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            self.num = q;
            self.exp -= 1;
        }
    }

    #[inline]
    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    /// The exponent `e` of the denominator `p^e`.
    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.exp == 0
    }

    /// p-adic valuation `v_p(x)`.
    pub fn valuation(&self) -> Valuation {
        if self.num.is_zero() {
            return Valuation::Infinite;
        }
        if self.exp > 0 {
            return Valuation::Finite(-(self.exp as i64));
        }
        let pb = self.p.to_bigint();
        let mut n = self.num.clone();
        let mut v = 0i64;
        loop {
            let (q, r) = n.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            n = q;
            v += 1;
        }
        Valuation::Finite(v)
    }

    /// The unit part `u` with `x = u · p^{v_p(x)}`; zero for zero.
    pub(crate) fn unit_part(&self) -> (BigInt, i64) {
        match self.valuation() {
            Valuation::Infinite => (BigInt::zero(), 0),
            Valuation::Finite(v) if v < 0 => (self.num.clone(), v),
            Valuation::Finite(v) => (&self.num / self.p.pow(v as u32), v),
        }
    }

    /// `|x|_p = p^{-v_p(x)}`, exactly; zero for zero.
    pub fn norm(&self) -> BigRational {
        match self.valuation() {
            Valuation::Infinite => BigRational::zero(),
            Valuation::Finite(v) if v >= 0 => {
                BigRational::new(BigInt::one(), self.p.pow(v as u32))
            }
            Valuation::Finite(v) => BigRational::from_integer(self.p.pow((-v) as u32)),
        }
    }

    /// The representative `α(x) ∈ [0,1) ∩ Z[1/p]` of `x` modulo `Z_p`.
    ///
    /// `α(x) = (n mod p^e) / p^e`, which is also the real fractional part of
    /// `x`; `x - α(x)` is an integer, hence a p-adic integer.
    pub fn frac_part(&self) -> PAdicRational {
        if self.exp == 0 {
            return Self::zero(self.p);
        }
        let modulus = self.p.pow(self.exp);
        PAdicRational::new(self.p, self.num.mod_floor(&modulus), self.exp)
    }

    /// Real floor `⌊x⌋`.
    pub fn floor(&self) -> BigInt {
        if self.exp == 0 {
            return self.num.clone();
        }
        self.num.div_floor(&self.p.pow(self.exp))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.p.ensure_same(other.p)?;
        let exp = self.exp.max(other.exp);
        let a = &self.num * self.p.pow(exp - self.exp);
        let b = &other.num * self.p.pow(exp - other.exp);
        Ok(Self::new(self.p, a + b, exp))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&-other)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.p.ensure_same(other.p)?;
        Ok(Self::new(
            self.p,
            &self.num * &other.num,
            self.exp + other.exp,
        ))
    }

    /// `x · p^m` for any integer `m`.
    pub fn mul_by_power(&self, m: i64) -> Self {
        if self.num.is_zero() {
            return self.clone();
        }
        if m >= 0 {
            let m = m as u64;
            if m <= self.exp as u64 {
                PAdicRational {
                    p: self.p,
                    num: self.num.clone(),
                    exp: self.exp - m as u32,
                }
            } else {
                PAdicRational {
                    p: self.p,
                    num: &self.num * self.p.pow((m - self.exp as u64) as u32),
                    exp: 0,
                }
            }
        } else {
            Self::new(self.p, self.num.clone(), self.exp + (-m) as u32)
        }
    }

    pub fn to_ratio(&self) -> BigRational {
        BigRational::new(self.num.clone(), self.p.pow(self.exp))
    }

    pub fn to_f64(&self) -> f64 {
        self.to_ratio().to_f64().unwrap_or(f64::NAN)
    }

    pub fn signum(&self) -> i32 {
        if self.num.is_zero() {
            0
        } else if self.num.is_positive() {
            1
        } else {
            -1
        }
    }

    /// Parses `n`, `n/p^e` or `n/d` with `d` a power of `p`.
    pub fn parse(p: Prime, s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("cannot parse `{s}` as an element of Z[1/{p}]"));
        let Some((n, d)) = s.split_once('/') else {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            return Ok(Self::from_bigint(p, n));
        };
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d = d.trim();
        if let Some((base, e)) = d.split_once('^') {
            let base: u64 = base.trim().parse().map_err(|_| bad())?;
            let e: u32 = e.trim().parse().map_err(|_| bad())?;
            if base != p.get() as u64 {
                return Err(Error::PrimeMismatch {
                    left: p.get(),
                    right: base.min(u32::MAX as u64) as u32,
                });
            }
            return Ok(Self::new(p, n, e));
        }
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Self::from_ratio(p, &BigRational::new(n, d))
    }
}

impl Neg for PAdicRational {
    type Output = PAdicRational;

    fn neg(self) -> PAdicRational {
        PAdicRational {
            p: self.p,
            num: -self.num,
            exp: self.exp,
        }
    }
}

impl Neg for &PAdicRational {
    type Output = PAdicRational;

    fn neg(self) -> PAdicRational {
        -(self.clone())
    }
}

impl PartialOrd for PAdicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.p != other.p {
            return None;
        }
        Some(self.to_ratio().cmp(&other.to_ratio()))
    }
}

/// `n/p^e` notation; integers print without a denominator.
impl fmt::Display for PAdicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}^{}", self.num, self.p, self.exp)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn q(prime: u64, s: &str) -> PAdicRational {
        PAdicRational::parse(p(prime), s).unwrap()
    }

    #[test]
    fn valuations() {
        assert_eq!(q(2, "12").valuation(), Valuation::Finite(2));
        assert_eq!(q(2, "3/4").valuation(), Valuation::Finite(-2));
        assert_eq!(q(2, "0").valuation(), Valuation::Infinite);
        assert_eq!(q(3, "-18").valuation(), Valuation::Finite(2));
    }

    #[test]
    fn norms() {
        assert_eq!(q(2, "12").norm(), BigRational::new(1.into(), 4.into()));
        assert_eq!(q(2, "3/4").norm(), BigRational::from_integer(4.into()));
        assert_eq!(q(5, "1").norm(), BigRational::one());
        assert_eq!(q(5, "0").norm(), BigRational::zero());
    }

    #[test]
    fn frac_part_examples() {
        assert_eq!(q(2, "3/4").frac_part(), q(2, "3/4"));
        assert_eq!(q(2, "7/4").frac_part(), q(2, "3/4"));
        assert_eq!(q(2, "5").frac_part(), q(2, "0"));
        assert_eq!(q(2, "-1/2").frac_part(), q(2, "1/2"));
        assert_eq!(q(3, "-7/9").frac_part(), q(3, "2/9"));
    }

    #[test]
    fn canonical_form() {
        let x = PAdicRational::new(p(2), BigInt::from(12), 3);
        assert_eq!(x.numer(), &BigInt::from(3));
        assert_eq!(x.exponent(), 1);
        let z = PAdicRational::new(p(2), BigInt::zero(), 5);
        assert_eq!(z.exponent(), 0);
        assert_eq!(q(2, "2/2^1"), q(2, "1"));
    }

    #[test]
    fn ring_operations() {
        assert_eq!(q(2, "1/2").checked_add(&q(2, "1/2")).unwrap(), q(2, "1"));
        assert_eq!(q(2, "3").mul_by_power(-2), q(2, "3/4"));
        assert_eq!(q(2, "3/4").checked_mul(&q(2, "2")).unwrap(), q(2, "3/2"));
        assert_eq!(q(2, "3/4").mul_by_power(3), q(2, "6"));
        assert_eq!(q(3, "5/27").checked_sub(&q(3, "2/9")).unwrap(), q(3, "-1/27"));
    }

    #[test]
    fn prime_mismatch_is_an_error() {
        let err = q(2, "1").checked_add(&q(3, "1")).unwrap_err();
        assert_eq!(err, Error::PrimeMismatch { left: 2, right: 3 });
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(q(2, "3/2^2").to_string(), "3/2^2");
        assert_eq!(q(2, "3/4").to_string(), "3/2^2");
        assert_eq!(q(3, "-5").to_string(), "-5");
        assert!(PAdicRational::parse(p(2), "1/3").is_err());
        assert!(PAdicRational::parse(p(2), "1/3^2").is_err());
        assert!(PAdicRational::parse(p(2), "x").is_err());
    }

    #[test]
    fn floor_is_real_floor() {
        assert_eq!(q(2, "-1/2").floor(), BigInt::from(-1));
        assert_eq!(q(2, "7/4").floor(), BigInt::from(1));
        assert_eq!(q(3, "-3").floor(), BigInt::from(-3));
    }
}
