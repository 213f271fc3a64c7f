//! Elements of `Γ = BS(1,p)` and of its closure `G = Aff(p, R)`.
//!
//! An element `(b, p^m)` is the affine map `t ↦ p^m t + b`, i.e. the matrix
//! `[[p^m, b], [0, 1]]`. Composition is the matrix product
//! `(b, p^m)(b', p^m') = (b + p^m b', p^{m+m'})`.
//!
//! The dilation is always an exact power of `p`, stored as the exponent.
//! Real translation parts are kept as exact rationals: an `f64` input is
//! converted to the dyadic rational it denotes, so projections onto the
//! fundamental domain never depend on rounding.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::padic::{PAdicRational, Prime, TruncatedPAdic};

/// `p^m` as an exact rational.
pub fn power_ratio(p: Prime, m: i64) -> BigRational {
    if m >= 0 {
        BigRational::from_integer(p.pow(m as u32))
    } else {
        BigRational::new(BigInt::one(), p.pow((-m) as u32))
    }
}

pub(crate) fn ratio_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| Error::InvalidElement(format!("translation {x} is not finite")))
}

/// An element of `BS(1,p)`: exact translation in `Z[1/p]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineExact {
    m: i64,
    b: PAdicRational,
}

impl AffineExact {
    pub fn new(b: PAdicRational, m: i64) -> Self {
        AffineExact { m, b }
    }

    pub fn identity(p: Prime) -> Self {
        AffineExact {
            m: 0,
            b: PAdicRational::zero(p),
        }
    }

    pub fn prime(&self) -> Prime {
        self.b.prime()
    }

    /// Exponent of the dilation `a = p^m`.
    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn b(&self) -> &PAdicRational {
        &self.b
    }

    pub fn is_identity(&self) -> bool {
        self.m == 0 && self.b.is_zero()
    }

    /// `|a|_p = p^{-m}`.
    pub fn dilation_norm(&self) -> BigRational {
        power_ratio(self.prime(), -self.m)
    }

    pub fn compose(&self, other: &AffineExact) -> Result<AffineExact> {
        let b = self.b.checked_add(&other.b.mul_by_power(self.m))?;
        Ok(AffineExact {
            m: self.m + other.m,
            b,
        })
    }

    /// `(-p^{-m} b, p^{-m})`.
    pub fn inverse(&self) -> AffineExact {
        AffineExact {
            m: -self.m,
            b: -self.b.mul_by_power(-self.m),
        }
    }

    pub fn act_on_rational(&self, x: &PAdicRational) -> Result<PAdicRational> {
        x.mul_by_power(self.m).checked_add(&self.b)
    }

    /// `γ·x = p^m x + b` on a truncated p-adic; precision shifts by `m`.
    pub fn act_on_padic(&self, x: &TruncatedPAdic) -> Result<TruncatedPAdic> {
        x.shift(self.m).add_rational(&self.b)
    }

    pub fn to_real(&self) -> AffineReal {
        AffineReal {
            p: self.prime(),
            m: self.m,
            b: self.b.to_ratio(),
        }
    }

    /// `[b, m]` with `b` in `n/p^e` notation.
    pub fn to_json(&self) -> Value {
        json!([self.b.to_string(), self.m])
    }

    pub fn from_json(p: Prime, v: &Value) -> Result<Self> {
        let bad = || Error::Parse(format!("expected [b, m] pair, got {v}"));
        let arr = v.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
        let b = match &arr[0] {
            Value::String(s) => PAdicRational::parse(p, s)?,
            Value::Number(n) => PAdicRational::from_int(p, n.as_i64().ok_or_else(bad)?),
            _ => return Err(bad()),
        };
        let m = arr[1].as_i64().ok_or_else(bad)?;
        Ok(AffineExact::new(b, m))
    }
}

impl fmt::Display for AffineExact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}^{})", self.b, self.prime(), self.m)
    }
}

/// An element of `Aff(p, R)`: dilation `p^m`, real translation `b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineReal {
    p: Prime,
    m: i64,
    b: BigRational,
}

impl AffineReal {
    pub fn new(p: Prime, b: f64, m: i64) -> Result<Self> {
        Ok(AffineReal {
            p,
            m,
            b: ratio_from_f64(b)?,
        })
    }

    pub fn from_ratio(p: Prime, b: BigRational, m: i64) -> Self {
        AffineReal { p, m, b }
    }

    pub fn identity(p: Prime) -> Self {
        AffineReal {
            p,
            m: 0,
            b: BigRational::zero(),
        }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn b(&self) -> f64 {
        self.b.to_f64().unwrap_or(f64::NAN)
    }

    pub fn b_exact(&self) -> &BigRational {
        &self.b
    }

    pub fn compose(&self, other: &AffineReal) -> Result<AffineReal> {
        self.p.ensure_same(other.p)?;
        Ok(AffineReal {
            p: self.p,
            m: self.m + other.m,
            b: &self.b + &other.b * power_ratio(self.p, self.m),
        })
    }

    /// `g γ` for `γ ∈ Γ`; mixed products land in `G`.
    pub fn compose_exact(&self, other: &AffineExact) -> Result<AffineReal> {
        self.compose(&other.to_real())
    }

    pub fn inverse(&self) -> AffineReal {
        let scale = power_ratio(self.p, -self.m);
        AffineReal {
            p: self.p,
            m: -self.m,
            b: -(&self.b * scale),
        }
    }

    /// `g·t = p^m t + b` in floating point.
    pub fn act_on_real(&self, t: f64) -> f64 {
        (self.p.get() as f64).powi(self.m as i32) * t + self.b()
    }

    pub fn act_on_ratio(&self, t: &BigRational) -> BigRational {
        t * power_ratio(self.p, self.m) + &self.b
    }

    /// `(b + shift, p^m)`.
    pub fn translated(&self, shift: &BigRational) -> AffineReal {
        AffineReal {
            p: self.p,
            m: self.m,
            b: &self.b + shift,
        }
    }

    /// `[b, m]` with `b` as a float.
    pub fn to_json(&self) -> Value {
        json!([self.b(), self.m])
    }

    pub fn from_json(p: Prime, v: &Value) -> Result<Self> {
        let bad = || Error::Parse(format!("expected [b, m] pair, got {v}"));
        let arr = v.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
        let b = arr[0].as_f64().ok_or_else(bad)?;
        let m = arr[1].as_i64().ok_or_else(bad)?;
        AffineReal::new(p, b, m)
    }
}

impl From<&AffineExact> for AffineReal {
    fn from(g: &AffineExact) -> Self {
        g.to_real()
    }
}

impl fmt::Display for AffineReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}^{})", self.b(), self.p, self.m)
    }
}
