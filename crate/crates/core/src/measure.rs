//! Finitely supported step distributions and their drifts.
//!
//! Drifts are carried as `coeff · ln(base)` with an exact rational `coeff`
//! and an exact `base > 1`, so every sign decision (which boundary regime
//! applies) is exact. The float value is only for display.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::AffineExact;
use crate::padic::{PAdicRational, Prime};

/// A place of `Q`: a finite prime or the archimedean place (`Q_∞ = R`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Place {
    Prime(u32),
    Infinity,
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Prime(q) => write!(f, "{q}"),
            Place::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for Place {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `φ = coeff · ln(base)` at a place.
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub place: Place,
    pub coeff: BigRational,
    pub log_base: BigRational,
    pub value: f64,
}

impl Drift {
    pub fn is_negative(&self) -> bool {
        self.coeff.is_negative()
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    /// `{place, exact_coeff, log_base, float_value}`.
    pub fn to_json(&self) -> Value {
        json!({
            "place": self.place.to_string(),
            "exact_coeff": self.coeff.to_string(),
            "log_base": self.log_base.to_string(),
            "float_value": self.value,
        })
    }
}

/// Writes `Σ_q c_q ln q` as `coeff · ln(base)` with integer-exponent
/// `base > 1` (or `base = 1`, `coeff = 0` when every `c_q` vanishes).
fn normalize_log_combination(place: Place, terms: &BTreeMap<u32, BigRational>) -> Drift {
    let value = terms
        .iter()
        .map(|(&q, c)| c.to_f64().unwrap_or(0.0) * (q as f64).ln())
        .sum();
    let nonzero: Vec<_> = terms.iter().filter(|(_, c)| !c.is_zero()).collect();
    if nonzero.is_empty() {
        return Drift {
            place,
            coeff: BigRational::zero(),
            log_base: BigRational::one(),
            value: 0.0,
        };
    }
    let mut num_gcd = BigInt::zero();
    let mut den_lcm = BigInt::one();
    for (_, c) in &nonzero {
        num_gcd = num_gcd.gcd(c.numer());
        den_lcm = den_lcm.lcm(c.denom());
    }
    let g = BigRational::new(num_gcd, den_lcm);
    let mut up = BigInt::one();
    let mut down = BigInt::one();
    for (&q, c) in &nonzero {
        let e = (*c / &g).to_integer();
        let k = e.abs().to_usize().expect("exponent fits in usize");
        let qk = num_traits::pow(BigInt::from(q), k);
        if e.is_positive() {
            up *= qk;
        } else {
            down *= qk;
        }
    }
    let (coeff, log_base) = if up > down {
        (g, BigRational::new(up, down))
    } else {
        (-g, BigRational::new(down, up))
    };
    Drift {
        place,
        coeff,
        log_base,
        value,
    }
}

fn ratio_sum<'a>(it: impl Iterator<Item = &'a BigRational>) -> BigRational {
    it.fold(BigRational::zero(), |acc, w| acc + w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub element: AffineExact,
    pub weight: BigRational,
}

/// A finitely supported probability `μ` on `BS(1,p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMeasure {
    p: Prime,
    atoms: Vec<Atom>,
}

impl StepMeasure {
    /// Checks that weights are positive and sum exactly to one.
    ///
    /// The generation condition (some atom with `m > 0` and some with
    /// `m < 0`) is reported by [`StepMeasure::report`] rather than enforced
    /// here, so point masses remain usable as test fixtures.
    pub fn new(p: Prime, atoms: Vec<(AffineExact, BigRational)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        for (g, w) in &atoms {
            p.ensure_same(g.prime())?;
            if !w.is_positive() {
                return Err(Error::InvalidMeasure(format!(
                    "weight {w} of atom {g} is not positive"
                )));
            }
        }
        let total = ratio_sum(atoms.iter().map(|(_, w)| w));
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(StepMeasure {
            p,
            atoms: atoms
                .into_iter()
                .map(|(element, weight)| Atom { element, weight })
                .collect(),
        })
    }

    pub fn point_mass(g: AffineExact) -> Self {
        StepMeasure {
            p: g.prime(),
            atoms: vec![Atom {
                element: g,
                weight: BigRational::one(),
            }],
        }
    }

    /// The reference measure `μ*`:
    /// `(0,p)` and `(1,p)` with weight 1/3 each, `(0,p⁻¹)` and `(1,p⁻¹)`
    /// with weight 1/6 each. Its `E[m] = 1/3`, so it contracts `Q_p`.
    pub fn mu_star(p: Prime) -> Self {
        let third = BigRational::new(1.into(), 3.into());
        let sixth = BigRational::new(1.into(), 6.into());
        let atom = |b: i64, m: i64| AffineExact::new(PAdicRational::from_int(p, b), m);
        StepMeasure::new(
            p,
            vec![
                (atom(0, 1), third.clone()),
                (atom(1, 1), third),
                (atom(0, -1), sixth.clone()),
                (atom(1, -1), sixth),
            ],
        )
        .expect("reference measure is valid")
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `Σ w_i m_i`.
    pub fn mean_exponent(&self) -> BigRational {
        self.atoms
            .iter()
            .map(|a| &a.weight * BigRational::from_integer(a.element.m().into()))
            .fold(BigRational::zero(), |acc, x| acc + x)
    }

    /// `φ_p = Σ w_i log|a(γ_i)|_p = -(Σ w_i m_i) ln p`.
    pub fn drift_p(&self) -> Drift {
        let coeff = -self.mean_exponent();
        Drift {
            place: Place::Prime(self.p.get()),
            value: coeff.to_f64().unwrap_or(0.0) * self.p.ln(),
            log_base: BigRational::from_integer(self.p.to_bigint()),
            coeff,
        }
    }

    /// `φ_∞ = Σ w_i ln a(γ_i) = (Σ w_i m_i) ln p`.
    pub fn drift_inf(&self) -> Drift {
        let mut d = self.drift_p();
        d.place = Place::Infinity;
        d.coeff = -d.coeff;
        d.value = -d.value;
        d
    }

    /// True when some atom dilates (`m > 0`) and some contracts (`m < 0`).
    ///
    /// This is a sufficient condition for the support to generate a
    /// subgroup that is non-compact in both directions; it is stronger
    /// than irreducibility.
    pub fn generates_both_directions(&self) -> bool {
        self.atoms.iter().any(|a| a.element.m() > 0) && self.atoms.iter().any(|a| a.element.m() < 0)
    }

    /// `α μ + (1 - α) other`, merging equal atoms.
    pub fn mix(&self, alpha: &BigRational, other: &StepMeasure) -> Result<StepMeasure> {
        self.p.ensure_same(other.p)?;
        if alpha.is_negative() || *alpha > BigRational::one() {
            return Err(Error::InvalidMeasure(format!(
                "mixture weight {alpha} not in [0,1]"
            )));
        }
        let beta = BigRational::one() - alpha;
        let mut merged: Vec<(AffineExact, BigRational)> = Vec::new();
        let scaled = self
            .atoms
            .iter()
            .map(|a| (a, alpha))
            .chain(other.atoms.iter().map(|a| (a, &beta)));
        for (a, s) in scaled {
            let w = &a.weight * s;
            if w.is_zero() {
                continue;
            }
            match merged.iter_mut().find(|(g, _)| *g == a.element) {
                Some((_, acc)) => *acc += w,
                None => merged.push((a.element.clone(), w)),
            }
        }
        StepMeasure::new(self.p, merged)
    }

    /// Views the measure on `Aff(Q)`, with `a = p^m`.
    pub fn to_rational(&self) -> RationalStepMeasure {
        RationalStepMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| RationalAtom {
                    b: a.element.b().to_ratio(),
                    a: crate::group::power_ratio(self.p, a.element.m()),
                    weight: a.weight.clone(),
                })
                .collect(),
        }
    }

    pub fn report(&self) -> MeasureReport {
        let drift_p = self.drift_p();
        let drift_inf = self.drift_inf();
        let regime = if drift_p.is_negative() {
            Regime::PadicContracting
        } else if drift_inf.is_negative() {
            Regime::RealContracting
        } else {
            Regime::ZeroDrift
        };
        MeasureReport {
            prime: self.p.get(),
            atoms: self.atoms.len(),
            generates_both_directions: self.generates_both_directions(),
            drift_p: drift_p.to_json(),
            drift_inf: drift_inf.to_json(),
            regime,
        }
    }

    /// Fails unless `φ_p < 0` (exact sign test).
    pub fn require_padic_contraction(&self) -> Result<()> {
        let d = self.drift_p();
        if d.is_negative() {
            Ok(())
        } else {
            Err(Error::NotContracting {
                place: d.place.to_string(),
                coeff: d.coeff.to_string(),
            })
        }
    }

    /// Fails unless `φ_∞ < 0` (exact sign test).
    pub fn require_real_contraction(&self) -> Result<()> {
        let d = self.drift_inf();
        if d.is_negative() {
            Ok(())
        } else {
            Err(Error::NotContracting {
                place: d.place.to_string(),
                coeff: d.coeff.to_string(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `φ_p < 0`: the walk converges in `Q_p`; the solenoid construction applies.
    PadicContracting,
    /// `φ_∞ < 0`: the walk converges in `R`.
    RealContracting,
    ZeroDrift,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureReport {
    pub prime: u32,
    pub atoms: usize,
    pub generates_both_directions: bool,
    pub drift_p: Value,
    pub drift_inf: Value,
    pub regime: Regime,
}

impl MeasureReport {
    /// Everything the solenoid boundary construction needs.
    pub fn is_solenoid_regime(&self) -> bool {
        self.generates_both_directions && self.regime == Regime::PadicContracting
    }
}

/// Validates raw atoms and reports the boundary regime.
pub fn validate(p: Prime, atoms: Vec<(AffineExact, BigRational)>) -> Result<MeasureReport> {
    Ok(StepMeasure::new(p, atoms)?.report())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalAtom {
    pub b: BigRational,
    pub a: BigRational,
    pub weight: BigRational,
}

/// A finitely supported probability on `Aff(Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalStepMeasure {
    atoms: Vec<RationalAtom>,
}

/// All drifts and the places where the walk contracts.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub drifts: Vec<Drift>,
    pub components: Vec<Place>,
}

impl Spectrum {
    pub fn drift(&self, place: Place) -> Option<&Drift> {
        self.drifts.iter().find(|d| d.place == place)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "drifts": self.drifts.iter().map(Drift::to_json).collect::<Vec<_>>(),
            "components": self.components.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        })
    }
}

impl RationalStepMeasure {
    pub fn new(atoms: Vec<RationalAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        for at in &atoms {
            if !at.weight.is_positive() {
                return Err(Error::InvalidMeasure(format!(
                    "weight {} is not positive",
                    at.weight
                )));
            }
            if !at.a.is_positive() {
                return Err(Error::InvalidMeasure(format!(
                    "dilation {} is not positive",
                    at.a
                )));
            }
        }
        let total = ratio_sum(atoms.iter().map(|a| &a.weight));
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(RationalStepMeasure { atoms })
    }

    pub fn atoms(&self) -> &[RationalAtom] {
        &self.atoms
    }

    /// `c_q = E[v_q(a)]` for every prime `q` dividing some dilation.
    fn mean_valuations(&self) -> BTreeMap<u32, BigRational> {
        let mut out: BTreeMap<u32, BigRational> = BTreeMap::new();
        for at in &self.atoms {
            let num = factorize(at.a.numer());
            let den = factorize(at.a.denom());
            for (q, e) in num {
                *out.entry(q).or_insert_with(BigRational::zero) +=
                    &at.weight * BigRational::from_integer(e.into());
            }
            for (q, e) in den {
                *out.entry(q).or_insert_with(BigRational::zero) -=
                    &at.weight * BigRational::from_integer(e.into());
            }
        }
        out
    }

    /// Drifts `φ_q = E[log|a|_q]` for each prime in play and `φ_∞ = E[ln a]`;
    /// the components are the places with negative drift.
    pub fn boundary_spectrum(&self) -> Spectrum {
        let c = self.mean_valuations();
        let mut drifts = Vec::with_capacity(c.len() + 1);
        for (&q, cq) in &c {
            // log|a|_q = -v_q(a) ln q
            let coeff = -cq.clone();
            drifts.push(Drift {
                place: Place::Prime(q),
                value: coeff.to_f64().unwrap_or(0.0) * (q as f64).ln(),
                log_base: BigRational::from_integer(q.into()),
                coeff,
            });
        }
        drifts.push(normalize_log_combination(Place::Infinity, &c));
        let components = drifts
            .iter()
            .filter(|d| d.is_negative())
            .map(|d| d.place)
            .collect();
        Spectrum { drifts, components }
    }
}

/// Trial-division factorization of `|n|` (`n != 0`).
fn factorize(n: &BigInt) -> Vec<(u32, u32)> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut d = BigInt::from(2u32);
    while &d * &d <= n {
        let mut e = 0u32;
        loop {
            let (q, r) = n.div_rem(&d);
            if !r.is_zero() {
                break;
            }
            n = q;
            e += 1;
        }
        if e > 0 {
            out.push((d.to_u32().expect("factor fits in u32"), e));
        }
        d += 1u32;
    }
    if n > BigInt::one() {
        out.push((n.to_u32().expect("factor fits in u32"), 1));
    }
    out
}

/// Parses an exact rational: `n`, `n/d`, or a finite decimal such as
/// `0.25` (read exactly, never through a float).
pub fn parse_ratio(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("cannot parse `{s}` as an exact rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = int.starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        let scale = num_traits::pow(BigInt::from(10u32), frac.len());
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let magnitude = int.abs() * &scale + frac;
        let num = if neg { -magnitude } else { magnitude };
        return Ok(BigRational::new(num, scale));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}
