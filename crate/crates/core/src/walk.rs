//! The right random walk `r_n = ω_1 ⋯ ω_n` and samplers for its limit
//! `Z_∞ = Σ a_1 ⋯ a_{n-1} b_n`.
//!
//! When `φ_p < 0` the series converges in `Q_p`; digits of the limit are
//! certified once the running exponent sum `S_n = m_1 + ... + m_n` has
//! stayed above the digit index for a whole confirmation window (and, in
//! conservative mode, sits `slack` above it). Convergence is almost sure
//! but has no effective rate, so certification is statistical.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::AffineExact;
use crate::measure::StepMeasure;
use crate::padic::{PAdicRational, TruncatedPAdic};
use crate::seed::{derive_seed, par_map, rng_from_seed, Stream};

/// Inverse-CDF sampling over the atoms of a step measure.
#[derive(Debug, Clone)]
pub struct StepSampler<'a> {
    measure: &'a StepMeasure,
    cdf: Cdf,
}

#[derive(Debug, Clone)]
enum Cdf {
    /// Cumulative numerators over a common denominator: exact.
    Exact { denom: u64, bounds: Vec<u64> },
    Float(Vec<f64>),
}

impl<'a> StepSampler<'a> {
    pub fn new(measure: &'a StepMeasure) -> Self {
        let atoms = measure.atoms();
        let denom = atoms
            .iter()
            .fold(BigInt::from(1), |acc, a| acc.lcm(a.weight.denom()));
        let cdf = match denom.to_u64() {
            Some(d) => {
                let mut acc = 0u64;
                let bounds = atoms
                    .iter()
                    .map(|a| {
                        let share = (a.weight.numer() * (&denom / a.weight.denom()))
                            .to_u64()
                            .expect("share bounded by common denominator");
                        acc += share;
                        acc
                    })
                    .collect();
                Cdf::Exact { denom: d, bounds }
            }
            None => {
                let mut acc = 0.0;
                Cdf::Float(
                    atoms
                        .iter()
                        .map(|a| {
                            acc += a.weight.to_f64().unwrap_or(0.0);
                            acc
                        })
                        .collect(),
                )
            }
        };
        StepSampler { measure, cdf }
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let last = self.measure.atoms().len() - 1;
        match &self.cdf {
            Cdf::Exact { denom, bounds } => {
                let u = rng.gen_range(0..*denom);
                bounds.iter().position(|&b| u < b).unwrap_or(last)
            }
            Cdf::Float(bounds) => {
                let u: f64 = rng.gen();
                bounds.iter().position(|&b| u < b).unwrap_or(last)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &'a AffineExact {
        &self.measure.atoms()[self.sample_index(rng)].element
    }
}

/// Draws one step of law `μ`.
pub fn sample_step<R: Rng + ?Sized>(mu: &StepMeasure, rng: &mut R) -> AffineExact {
    StepSampler::new(mu).sample(rng).clone()
}

/// The infinite i.i.d. step sequence `ω_1, ω_2, ...` of a given seed.
///
/// Walks, boundary samples and path probes built from the same seed see
/// the same steps.
pub struct StepStream<'a> {
    sampler: StepSampler<'a>,
    rng: ChaCha8Rng,
}

impl<'a> StepStream<'a> {
    pub fn new(mu: &'a StepMeasure, seed: u64) -> Self {
        StepStream {
            sampler: StepSampler::new(mu),
            rng: rng_from_seed(seed),
        }
    }
}

impl<'a> Iterator for StepStream<'a> {
    type Item = &'a AffineExact;

    fn next(&mut self) -> Option<&'a AffineExact> {
        Some(self.sampler.sample(&mut self.rng))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrajectory {
    pub seed: u64,
    /// `ω_1, ..., ω_n`.
    pub steps: Vec<AffineExact>,
    /// `r_0 = e, r_1, ..., r_n`.
    pub partials: Vec<AffineExact>,
}

impl WalkTrajectory {
    pub fn last(&self) -> &AffineExact {
        self.partials.last().expect("r_0 always present")
    }
}

pub fn run_walk(mu: &StepMeasure, n: usize, seed: u64) -> Result<WalkTrajectory> {
    let mut partials = Vec::with_capacity(n + 1);
    partials.push(AffineExact::identity(mu.prime()));
    let steps: Vec<AffineExact> = StepStream::new(mu, seed).take(n).cloned().collect();
    for w in &steps {
        let next = partials.last().expect("nonempty").compose(w)?;
        partials.push(next);
    }
    Ok(WalkTrajectory {
        seed,
        steps,
        partials,
    })
}

/// Parameters of the p-adic boundary sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundaryConfig {
    /// Digits are certified for every index below this value.
    pub digits: i64,
    /// Confirmation window `W`.
    pub window: usize,
    /// Conservative mode: also require `S_n + c ≥ i + 1 + slack`.
    pub slack: Option<i64>,
    pub max_steps: usize,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig {
            digits: 8,
            window: 32,
            slack: Some(DEFAULT_SLACK),
            max_steps: 10_000,
        }
    }
}

/// With `W = 32` alone roughly 3 in 10^3 samples of `μ*` certify a digit
/// that a longer run later changes; a slack of 12 brings this below 10^-4.
pub const DEFAULT_SLACK: i64 = 12;

impl BoundaryConfig {
    pub fn with_digits(mut self, digits: i64) -> Self {
        self.digits = digits;
        self
    }
}

/// A draw of `Z_∞ ~ ν` known modulo `p^precision`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    pub value: TruncatedPAdic,
    /// Number of certified digits stored in `value` (indices `v .. N-1`).
    pub certified_digits: usize,
    pub steps_used: usize,
    pub seed: u64,
}

impl BoundarySample {
    /// `v_p(Z_∞) ≥ v`, decided from certified digits (`v ≤ precision`).
    pub fn in_cylinder(&self, v: i64) -> Result<bool> {
        let precision = self.value.precision();
        if v > precision {
            return Err(Error::InsufficientPrecision {
                needed: v,
                available: precision,
            });
        }
        Ok(self.value.valuation().map_or(true, |val| val >= v))
    }
}

/// `min v_p(b)` over atoms with `b != 0`; `None` if every `b` vanishes.
fn min_translation_valuation(mu: &StepMeasure) -> Option<i64> {
    mu.atoms()
        .iter()
        .filter_map(|a| a.element.b().valuation().finite())
        .min()
}

/// Samples `Z_∞` in `Q_p` along the walk of the given seed.
pub fn sample_boundary_padic(
    mu: &StepMeasure,
    cfg: &BoundaryConfig,
    seed: u64,
) -> Result<BoundarySample> {
    mu.require_padic_contraction()?;
    let p = mu.prime();
    let Some(c) = min_translation_valuation(mu) else {
        return Ok(BoundarySample {
            value: TruncatedPAdic::zero(p, cfg.digits),
            certified_digits: 1,
            steps_used: 0,
            seed,
        });
    };
    let window = cfg.window.max(1);
    let mut recent = std::collections::VecDeque::with_capacity(window);
    let mut sum = PAdicRational::zero(p);
    let mut exponent = 0i64;
    for (n, step) in StepStream::new(mu, seed).take(cfg.max_steps).enumerate() {
        if !step.b().is_zero() {
            sum = sum.checked_add(&step.b().mul_by_power(exponent))?;
        }
        exponent += step.m();
        if recent.len() == window {
            recent.pop_front();
        }
        recent.push_back(exponent);
        if recent.len() < window {
            continue;
        }
        let mut bound = recent.iter().copied().min().expect("window nonempty") + c;
        if let Some(slack) = cfg.slack {
            bound = bound.min(exponent + c - slack);
        }
        if bound >= cfg.digits {
            let value = TruncatedPAdic::reduce(&sum, cfg.digits);
            return Ok(BoundarySample {
                certified_digits: value.digits().len(),
                value,
                steps_used: n + 1,
                seed,
            });
        }
    }
    Err(Error::MaxStepsExceeded {
        max_steps: cfg.max_steps,
    })
}

/// The exact partial sum `Σ_{k ≤ steps} a(r_{k-1}) b(ω_k)` of a seed.
pub fn exact_partial_sum(mu: &StepMeasure, seed: u64, steps: usize) -> Result<PAdicRational> {
    let mut sum = PAdicRational::zero(mu.prime());
    let mut exponent = 0i64;
    for step in StepStream::new(mu, seed).take(steps) {
        sum = sum.checked_add(&step.b().mul_by_power(exponent))?;
        exponent += step.m();
    }
    Ok(sum)
}

/// The partial sum of `steps` steps reduced modulo `p^digits`.
///
/// Terms that vanish modulo `p^digits` are skipped, so long replays stay
/// cheap.
pub fn replay_digits(mu: &StepMeasure, seed: u64, steps: usize, digits: i64) -> Result<TruncatedPAdic> {
    let mut sum = PAdicRational::zero(mu.prime());
    let mut exponent = 0i64;
    for step in StepStream::new(mu, seed).take(steps) {
        if let Some(v) = step.b().valuation().finite() {
            if v + exponent < digits {
                sum = sum.checked_add(&step.b().mul_by_power(exponent))?;
            }
        }
        exponent += step.m();
    }
    Ok(TruncatedPAdic::reduce(&sum, digits))
}

/// `n` boundary samples with seeds derived from `master`, in index order.
pub fn draw_boundary_batch(
    mu: &StepMeasure,
    cfg: &BoundaryConfig,
    n: usize,
    master: u64,
    workers: usize,
) -> Result<Vec<BoundarySample>> {
    mu.require_padic_contraction()?;
    let results = par_map(n, workers, |i| {
        sample_boundary_padic(mu, cfg, derive_seed(master, Stream::Boundary, i as u64))
    });
    results.into_iter().collect()
}

/// A proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MassEstimate {
    pub fn from_hits(hits: usize, n: usize) -> Self {
        let estimate = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        let stderr = if n == 0 {
            0.0
        } else {
            (estimate * (1.0 - estimate) / n as f64).sqrt()
        };
        MassEstimate { estimate, stderr, n }
    }
}

/// `ν̂(p^v Z_p)` on a fixed set of samples.
pub fn cylinder_mass(samples: &[BoundarySample], v: i64) -> Result<MassEstimate> {
    let mut hits = 0;
    for s in samples {
        if s.in_cylinder(v)? {
            hits += 1;
        }
    }
    Ok(MassEstimate::from_hits(hits, samples.len()))
}

/// Fraction of fresh boundary samples with `v_p(Z_∞) ≥ v`.
pub fn estimate_cylinder_mass(
    mu: &StepMeasure,
    v: i64,
    cfg: &BoundaryConfig,
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<MassEstimate> {
    let cfg = cfg.with_digits(cfg.digits.max(v));
    let samples = draw_boundary_batch(mu, &cfg, n, seed, workers)?;
    cylinder_mass(&samples, v)
}

/// Parameters of the real (contracting) sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealConfig {
    pub tolerance: f64,
    pub window: usize,
    pub max_steps: usize,
}

impl Default for RealConfig {
    fn default() -> Self {
        RealConfig {
            tolerance: 1e-12,
            window: 32,
            max_steps: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealSample {
    pub value: f64,
    pub steps_used: usize,
    pub seed: u64,
}

/// Samples `Z_∞` in `R` (requires `φ_∞ < 0`).
///
/// Stops once the increment bound `a(r_n) · max|b|` has stayed below the
/// tolerance for a full window.
pub fn sample_boundary_real(mu: &StepMeasure, cfg: &RealConfig, seed: u64) -> Result<RealSample> {
    mu.require_real_contraction()?;
    let max_b = mu
        .atoms()
        .iter()
        .map(|a| a.element.b().to_f64().abs())
        .fold(0.0, f64::max);
    if max_b == 0.0 {
        return Ok(RealSample {
            value: 0.0,
            steps_used: 0,
            seed,
        });
    }
    let p = mu.prime().get() as f64;
    let mut sum = 0.0;
    let mut exponent = 0i64;
    let mut quiet = 0usize;
    for (n, step) in StepStream::new(mu, seed).take(cfg.max_steps).enumerate() {
        let scale = p.powi(exponent as i32);
        sum += scale * step.b().to_f64();
        exponent += step.m();
        if p.powi(exponent as i32) * max_b < cfg.tolerance {
            quiet += 1;
            if quiet >= cfg.window {
                return Ok(RealSample {
                    value: sum,
                    steps_used: n + 1,
                    seed,
                });
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::MaxStepsExceeded {
        max_steps: cfg.max_steps,
    })
}
