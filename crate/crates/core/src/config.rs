//! Plain-text experiment configuration.
//!
//! ```text
//! # reference measure for p = 2
//! prime 2
//! seed 42
//! atom b=0 m=1 w=1/3
//! atom b=1 m=1 w=1/3
//! atom b=0 m=-1 w=1/6
//! atom b=1 m=-1 w=1/6
//! ratom b=0 a=3/2 w=2/3
//! n 100000
//! b_grid 1/4 1/2 3/4 3/2
//! m_range 1 8
//! ```
//!
//! Weights and translations are exact rationals (`n`, `n/d`, `n/p^e` or a
//! finite decimal); floats never enter a weight or an exact `b`.

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::group::AffineExact;
use crate::measure::{parse_ratio, RationalAtom, RationalStepMeasure, StepMeasure};
use crate::padic::{PAdicRational, Prime};

/// Scalar and list parameters accepted as `key value...` lines.
pub const PARAM_KEYS: &[&str] = &[
    "n", "digits", "window", "slack", "max_steps", "horizon", "paths", "inner", "b_grid",
    "m_range", "b", "m", "x", "observable",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub prime: Prime,
    pub seed: Option<u64>,
    pub atoms: Vec<(AffineExact, BigRational)>,
    pub ratoms: Vec<RationalAtom>,
    pub params: BTreeMap<String, String>,
}

fn fields(rest: &str, line_no: usize) -> Result<BTreeMap<&str, &str>> {
    let mut out = BTreeMap::new();
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {line_no}: expected key=value, got `{tok}`")))?;
        if out.insert(k, v).is_some() {
            return Err(Error::Parse(format!("line {line_no}: `{k}` given twice")));
        }
    }
    Ok(out)
}

fn field<'a>(f: &BTreeMap<&str, &'a str>, key: &str, line_no: usize) -> Result<&'a str> {
    f.get(key)
        .copied()
        .ok_or_else(|| Error::Parse(format!("line {line_no}: missing `{key}=`")))
}

/// An exact element of `Z[1/p]` written as `n`, `n/p^e`, `n/d` or a decimal.
pub fn parse_exact(p: Prime, s: &str) -> Result<PAdicRational> {
    PAdicRational::parse(p, s).or_else(|_| PAdicRational::from_ratio(p, &parse_ratio(s)?))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let mut prime = None;
        for (no, l) in &lines {
            if let Some(rest) = l.strip_prefix("prime ") {
                let p: u64 = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {no}: bad prime `{rest}`")))?;
                if prime.replace(Prime::new(p)?).is_some() {
                    return Err(Error::Parse(format!("line {no}: prime given twice")));
                }
            }
        }
        let prime = prime.ok_or_else(|| Error::Parse("missing `prime` line".into()))?;

        let mut cfg = ExperimentConfig {
            prime,
            seed: None,
            atoms: Vec::new(),
            ratoms: Vec::new(),
            params: BTreeMap::new(),
        };
        for (no, l) in lines {
            let (key, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
            let rest = rest.trim();
            match key {
                "prime" => {}
                "seed" => {
                    let s = rest
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {no}: bad seed `{rest}`")))?;
                    if cfg.seed.replace(s).is_some() {
                        return Err(Error::Parse(format!("line {no}: seed given twice")));
                    }
                }
                "atom" => {
                    let f = fields(rest, no)?;
                    let b = parse_exact(prime, field(&f, "b", no)?)?;
                    let m: i64 = field(&f, "m", no)?
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {no}: bad exponent")))?;
                    let w = parse_ratio(field(&f, "w", no)?)?;
                    cfg.atoms.push((AffineExact::new(b, m), w));
                }
                "ratom" => {
                    let f = fields(rest, no)?;
                    cfg.ratoms.push(RationalAtom {
                        b: parse_ratio(field(&f, "b", no)?)?,
                        a: parse_ratio(field(&f, "a", no)?)?,
                        weight: parse_ratio(field(&f, "w", no)?)?,
                    });
                }
                k if PARAM_KEYS.contains(&k) => {
                    if rest.is_empty() {
                        return Err(Error::Parse(format!("line {no}: `{k}` needs a value")));
                    }
                    cfg.params.insert(k.to_string(), rest.to_string());
                }
                other => return Err(Error::Parse(format!("line {no}: unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    /// The step measure, with every invariant enforced: exact weights
    /// summing to one and atoms moving in both directions.
    pub fn measure(&self) -> Result<StepMeasure> {
        let mu = StepMeasure::new(self.prime, self.atoms.clone())?;
        if !mu.generates_both_directions() {
            return Err(Error::InvalidMeasure(
                "need an atom with m > 0 and an atom with m < 0".into(),
            ));
        }
        Ok(mu)
    }

    /// The `ratom` lines if present, otherwise the step measure viewed on
    /// `Aff(Q)`.
    pub fn rational_measure(&self) -> Result<RationalStepMeasure> {
        if self.ratoms.is_empty() {
            Ok(StepMeasure::new(self.prime, self.atoms.clone())?.to_rational())
        } else {
            RationalStepMeasure::new(self.ratoms.clone())
        }
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn param_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.param(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Parse(format!("bad value `{v}` for `{key}`")))
            })
            .transpose()
    }
}
