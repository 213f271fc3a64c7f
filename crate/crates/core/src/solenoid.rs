//! The fundamental domain `Δ = [0,1) × Z_p` of the twisted action
//! `γ ⋆ (g, x) = (g γ⁻¹, γ·x)` of `Γ` on `G × Q_p`, and the induced
//! action of `G` on the solenoid.
//!
//! For `g = (b, p^m)` and `x ∈ Q_p` the unique `γ` with `γ ⋆ (g, x) ∈ Δ` is
//! `γ = (k, p^m)` with `k = ⌊b + α(p^m x)⌋ − α(p^m x)`, landing on the point
//! `(b − k, p^m x + k)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::{AffineExact, AffineReal};
use crate::measure::StepMeasure;
use crate::padic::{PAdicRational, Prime, TruncatedPAdic};
use crate::walk::{sample_boundary_padic, BoundaryConfig};

/// Digits of `p^m x` that must be known at and above index 0 when
/// projecting.
pub const GUARD_DIGITS: i64 = 2;

/// A point `(x_∞, x_p)` of `Δ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolenoidPoint {
    x_inf: BigRational,
    x_p: TruncatedPAdic,
}

impl SolenoidPoint {
    pub fn new(x_inf: BigRational, x_p: TruncatedPAdic) -> Result<Self> {
        if x_inf.is_negative() || x_inf >= BigRational::one() {
            return Err(Error::InvalidPoint(format!("x_inf = {x_inf} is not in [0,1)")));
        }
        if !x_p.is_integral() {
            return Err(Error::InvalidPoint(format!("x_p = {x_p} is not in Z_p")));
        }
        Ok(SolenoidPoint { x_inf, x_p })
    }

    pub fn from_f64(x_inf: f64, x_p: TruncatedPAdic) -> Result<Self> {
        let r = BigRational::from_float(x_inf)
            .ok_or_else(|| Error::InvalidPoint(format!("x_inf = {x_inf} is not finite")))?;
        Self::new(r, x_p)
    }

    pub fn prime(&self) -> Prime {
        self.x_p.prime()
    }

    pub fn x_inf(&self) -> f64 {
        self.x_inf.to_f64().unwrap_or(f64::NAN)
    }

    pub fn x_inf_exact(&self) -> &BigRational {
        &self.x_inf
    }

    pub fn x_p(&self) -> &TruncatedPAdic {
        &self.x_p
    }

    /// Same real coordinate, and `x_p` agreeing on the common precision.
    pub fn agrees_with(&self, other: &SolenoidPoint) -> bool {
        self.x_inf == other.x_inf && self.x_p.agrees_with(&other.x_p)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "x_inf": self.x_inf(),
            "x_inf_exact": self.x_inf.to_string(),
            "x_p": self.x_p.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionResult {
    pub point: SolenoidPoint,
    /// The `γ = (k, p^m)` with `γ ⋆ (g, x) ∈ Δ`.
    pub gamma: AffineExact,
}

impl ProjectionResult {
    pub fn to_json(&self) -> Value {
        json!({
            "point": self.point.to_json(),
            "gamma": self.gamma.to_json(),
        })
    }
}

/// Precision `x` needs before projecting with dilation exponent `m`.
pub fn required_precision(m: i64) -> i64 {
    GUARD_DIGITS - m
}

/// The representative of the `⋆`-orbit of `(g, x)` in `Δ`.
pub fn project(g: &AffineReal, x: &TruncatedPAdic) -> Result<ProjectionResult> {
    let p = g.prime();
    p.ensure_same(x.prime())?;
    let m = g.m();
    if x.precision() < required_precision(m) {
        return Err(Error::InsufficientPrecision {
            needed: required_precision(m),
            available: x.precision(),
        });
    }
    let y = x.shift(m);
    let alpha = y.frac_part()?;
    let t = g.b_exact() + alpha.to_ratio();
    let fl = t.floor();
    let k = PAdicRational::from_bigint(p, fl.to_integer()).checked_sub(&alpha)?;
    let x_p = y.add_rational(&k)?;
    let point = SolenoidPoint {
        x_inf: t - fl,
        x_p,
    };
    Ok(ProjectionResult {
        point,
        gamma: AffineExact::new(k, m),
    })
}

/// Checks `project(g γ⁻¹, γ·x) = project(g, x)`, with the returned group
/// elements related by `γ_lhs = γ_rhs γ⁻¹`.
pub fn star_invariance_check(g: &AffineReal, x: &TruncatedPAdic, gamma: &AffineExact) -> Result<bool> {
    let inv = gamma.inverse();
    let lhs = project(&g.compose_exact(&inv)?, &gamma.act_on_padic(x)?)?;
    let rhs = project(g, x)?;
    Ok(lhs.point.agrees_with(&rhs.point) && lhs.gamma == rhs.gamma.compose(&inv)?)
}

/// `g₀ · (x_∞, x_p)`, the action of `G` on the solenoid.
pub fn act(g0: &AffineReal, s: &SolenoidPoint) -> Result<SolenoidPoint> {
    let lift = AffineReal::from_ratio(s.prime(), s.x_inf.clone(), 0);
    Ok(project(&g0.compose(&lift)?, &s.x_p)?.point)
}

pub fn act_exact(gamma: &AffineExact, s: &SolenoidPoint) -> Result<SolenoidPoint> {
    act(&gamma.to_real(), s)
}

/// One draw from `ν̃`: `x ~ ν`, then `(α(x), x − α(x))`.
pub fn sample_nu_tilde(mu: &StepMeasure, cfg: &BoundaryConfig, seed: u64) -> Result<SolenoidPoint> {
    let cfg = cfg.with_digits(cfg.digits.max(required_precision(0)));
    let x = sample_boundary_padic(mu, &cfg, seed)?.value;
    Ok(project(&AffineReal::identity(mu.prime()), &x)?.point)
}

/// Bounds of the brute-force search over `k = j / p^e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBound {
    pub max_abs_numerator: i64,
    pub max_exponent: u32,
    /// Exponents `m_g − spread ..= m_g + spread` are tried.
    pub exponent_spread: i64,
}

impl Default for SearchBound {
    fn default() -> Self {
        SearchBound {
            max_abs_numerator: 64,
            max_exponent: 6,
            exponent_spread: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniquenessReport {
    pub count: usize,
    pub solutions: Vec<AffineExact>,
}

/// Every `γ = (j/p^e, p^m)` in the search set with `γ ⋆ (g, x) ∈ Δ`.
///
/// All arithmetic is exact: `b` is the exact translation of `g`.
pub fn fundamental_domain_uniqueness(
    g: &AffineReal,
    x: &PAdicRational,
    bound: SearchBound,
) -> Result<UniquenessReport> {
    let p = g.prime();
    p.ensure_same(x.prime())?;
    let mut seen = std::collections::HashSet::new();
    let mut candidates = Vec::new();
    for e in 0..=bound.max_exponent {
        for j in -bound.max_abs_numerator..=bound.max_abs_numerator {
            let k = PAdicRational::new(p, BigInt::from(j), e);
            if seen.insert(k.clone()) {
                candidates.push(k);
            }
        }
    }
    let one = BigRational::one();
    let mut solutions = Vec::new();
    for m in g.m() - bound.exponent_spread..=g.m() + bound.exponent_spread {
        for k in &candidates {
            let gamma = AffineExact::new(k.clone(), m);
            let moved = g.compose_exact(&gamma.inverse())?;
            if moved.m() != 0 {
                continue;
            }
            let b = moved.b_exact();
            if b.is_negative() || *b >= one {
                continue;
            }
            let image = gamma.act_on_rational(x)?;
            if image.valuation().finite().map_or(true, |v| v >= 0) {
                solutions.push(gamma);
            }
        }
    }
    Ok(UniquenessReport {
        count: solutions.len(),
        solutions,
    })
}

/// Number of `β = j/p^e ∈ [0,1)` with `e ≤ max_exponent` and `x − β ∈ Z_p`.
///
/// Two such `β` differ by an element of `Z_p ∩ Z[1/p] ∩ (−1, 1) = {0}`, so
/// the count is 1 whenever `v_p(x) ≥ −max_exponent`.
pub fn count_fractional_representatives(x: &PAdicRational, max_exponent: u32) -> Result<usize> {
    let p = x.prime();
    let denom = p.pow(max_exponent);
    let mut count = 0;
    let mut j = BigInt::zero();
    while j < denom {
        let beta = PAdicRational::new(p, j.clone(), max_exponent);
        if x.checked_sub(&beta)?.valuation().finite().map_or(true, |v| v >= 0) {
            count += 1;
        }
        j += 1;
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prime(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn q(p: Prime, s: &str) -> PAdicRational {
        PAdicRational::parse(p, s).unwrap()
    }

    fn trunc(p: Prime, s: &str, n: i64) -> TruncatedPAdic {
        TruncatedPAdic::from_rational(&q(p, s), n).unwrap()
    }

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn points_in_delta_project_to_themselves() {
        let p = prime(2);
        let g = AffineReal::new(p, 0.375, 0).unwrap();
        let x = trunc(p, "5", 8);
        let r = project(&g, &x).unwrap();
        assert!(r.gamma.b().is_zero());
        assert_eq!(r.point.x_inf(), 0.375);
        assert_eq!(r.point.x_p(), &x);
    }

    #[test]
    fn worked_projections() {
        let p = prime(2);
        let r = project(&AffineReal::new(p, 0.3, 0).unwrap(), &trunc(p, "1/2", 6)).unwrap();
        assert_eq!(r.gamma, AffineExact::new(q(p, "-1/2"), 0));
        assert_eq!(
            r.point.x_inf_exact(),
            &(BigRational::from_float(0.3).unwrap() + ratio(1, 2))
        );
        assert!(r.point.x_p().is_zero());

        let r = project(&AffineReal::new(p, 1.7, 0).unwrap(), &TruncatedPAdic::zero(p, 6)).unwrap();
        assert_eq!(r.gamma, AffineExact::new(q(p, "1"), 0));
        assert!((r.point.x_inf() - 0.7).abs() < 1e-15);
        assert_eq!(r.point.x_p().to_rational(), q(p, "1"));
    }

    #[test]
    fn projection_needs_digits_below_zero() {
        let p = prime(3);
        let g = AffineReal::new(p, 0.5, -3).unwrap();
        let x = trunc(p, "1", 4);
        assert_eq!(
            project(&g, &x),
            Err(Error::InsufficientPrecision { needed: 5, available: 4 })
        );
        assert!(project(&g, &trunc(p, "1", 5)).is_ok());
    }

    #[test]
    fn integral_sums_use_the_half_open_convention() {
        // b + α(x) = 1 exactly: the point lands at x_inf = 0, never 1.
        let p = prime(2);
        let g = AffineReal::new(p, 0.5, 0).unwrap();
        let r = project(&g, &trunc(p, "1/2", 6)).unwrap();
        assert_eq!(r.point.x_inf(), 0.0);
        assert_eq!(r.gamma.b(), &q(p, "1/2"));
    }

    #[test]
    fn action_example() {
        let p = prime(2);
        let s = SolenoidPoint::from_f64(0.25, TruncatedPAdic::zero(p, 6)).unwrap();
        let g0 = AffineReal::new(p, 1.0, 1).unwrap();
        let t = act(&g0, &s).unwrap();
        assert_eq!(t.x_inf(), 0.5);
        assert_eq!(t.x_p().to_rational(), q(p, "1"));
        assert_eq!(act(&AffineReal::identity(p), &s).unwrap(), s);
    }

    #[test]
    fn star_invariance_examples() {
        let p = prime(2);
        let g = AffineReal::new(p, 0.3, 1).unwrap();
        let x = trunc(p, "3/8", 12);
        assert!(star_invariance_check(&g, &x, &AffineExact::identity(p)).unwrap());
        for (k, m) in [("1", 1), ("-5/4", -2), ("1000001/2^3", 0), ("-77", 3)] {
            let gamma = AffineExact::new(q(p, k), m);
            assert!(star_invariance_check(&g, &x, &gamma).unwrap(), "{gamma}");
        }
    }

    #[test]
    fn search_confirms_worked_projections() {
        let p = prime(2);
        for (b, x) in [(0.3, "1/2"), (1.7, "0"), (0.25, "3/4"), (-2.125, "-7/8")] {
            let g = AffineReal::new(p, b, 0).unwrap();
            let report = fundamental_domain_uniqueness(&g, &q(p, x), SearchBound::default()).unwrap();
            assert_eq!(report.count, 1, "b = {b}, x = {x}");
            let n = 10;
            assert_eq!(report.solutions[0], project(&g, &trunc(p, x, n)).unwrap().gamma);
        }
    }

    #[test]
    fn sampled_points_are_in_delta() {
        let mu = StepMeasure::mu_star(prime(3));
        for seed in 0..200 {
            let s = sample_nu_tilde(&mu, &BoundaryConfig::default(), seed).unwrap();
            assert!(s.x_inf() >= 0.0 && s.x_inf() < 1.0);
            assert!(s.x_p().is_integral());
            let x = sample_boundary_padic(&mu, &BoundaryConfig::default(), seed).unwrap().value;
            if x.is_integral() {
                assert_eq!(s.x_inf(), 0.0);
                assert_eq!(s.x_p(), &x);
            }
        }
    }

    #[test]
    fn fractional_representative_is_unique() {
        let p = prime(3);
        for x in ["5/9", "-1/3", "7", "-100/27"] {
            assert_eq!(count_fractional_representatives(&q(p, x), 3).unwrap(), 1, "{x}");
        }
        // Denominator beyond the search exponent: no representative found.
        assert_eq!(count_fractional_representatives(&q(p, "1/81"), 3).unwrap(), 0);
    }

    #[test]
    fn points_validate_their_coordinates() {
        let p = prime(2);
        assert!(SolenoidPoint::from_f64(1.0, TruncatedPAdic::zero(p, 3)).is_err());
        assert!(SolenoidPoint::from_f64(-0.1, TruncatedPAdic::zero(p, 3)).is_err());
        assert!(SolenoidPoint::from_f64(0.5, trunc(p, "1/2", 3)).is_err());
    }
}
