//! Monte Carlo Poisson transforms `f_φ(g) = ∫ φ(project(g, x)) dν(x)` and
//! checks of the mean-value property `f(g) = Σ_γ μ(γ) f(gγ)`.
//!
//! Every estimator in this module evaluates all of its arguments on one
//! shared batch of boundary samples (common random numbers), so identities
//! that hold pointwise hold bit for bit.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{AffineExact, AffineReal};
use crate::measure::StepMeasure;
use crate::padic::{Prime, TruncatedPAdic};
use crate::seed::{derive_seed, par_map, Stream};
use crate::solenoid::{project, required_precision, SolenoidPoint};
use crate::walk::{sample_boundary_padic, BoundaryConfig, MassEstimate, StepStream};

/// Attempts per sample index before a certification failure is fatal.
const MAX_RESAMPLES: u64 = 8;

/// A bounded function on `Δ` depending on finitely many digits of `x_p`
/// and on an interval for `x_∞`.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryObservable {
    Constant(f64),
    /// `1{d_low .. d_{low+len-1} of x_p = pattern} · 1{x_∞ ∈ [lo, hi)}`.
    Cylinder {
        low: i64,
        pattern: Vec<u32>,
        lo: BigRational,
        hi: BigRational,
    },
    /// `1{d_0(x_p) = 0}`: the restriction to `Δ` of
    /// `1_{[0,1)×{1}}(g) 1_{pZ_p}(x)`.
    WorkedExample,
}

impl BoundaryObservable {
    pub fn cylinder(low: i64, pattern: Vec<u32>, lo: f64, hi: f64) -> Result<Self> {
        let conv = |t: f64| {
            BigRational::from_float(t)
                .ok_or_else(|| Error::InvalidObservable(format!("interval end {t} is not finite")))
        };
        if low < 0 {
            return Err(Error::InvalidObservable(format!(
                "digit index {low} is negative; x_p lies in Z_p"
            )));
        }
        if pattern.is_empty() {
            return Err(Error::InvalidObservable("empty digit pattern".into()));
        }
        Ok(BoundaryObservable::Cylinder {
            low,
            pattern,
            lo: conv(lo)?,
            hi: conv(hi)?,
        })
    }

    /// Digits of `x_p` below this index must be known.
    pub fn required_digits(&self) -> i64 {
        match self {
            BoundaryObservable::Constant(_) => 0,
            BoundaryObservable::Cylinder { low, pattern, .. } => low + pattern.len() as i64,
            BoundaryObservable::WorkedExample => 1,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            BoundaryObservable::Constant(c) => c.abs(),
            _ => 1.0,
        }
    }

    pub fn eval(&self, s: &SolenoidPoint) -> Result<f64> {
        let need = self.required_digits();
        if s.x_p().precision() < need {
            return Err(Error::InsufficientPrecision {
                needed: need,
                available: s.x_p().precision(),
            });
        }
        let hit = match self {
            BoundaryObservable::Constant(c) => return Ok(*c),
            BoundaryObservable::WorkedExample => s.x_p().digit(0) == Some(0),
            BoundaryObservable::Cylinder {
                low,
                pattern,
                lo,
                hi,
            } => {
                let x = s.x_inf_exact();
                x >= lo
                    && x < hi
                    && pattern
                        .iter()
                        .enumerate()
                        .all(|(i, &d)| s.x_p().digit(low + i as i64) == Some(d))
            }
        };
        Ok(if hit { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Sample indices whose first draw failed to certify.
    pub resampled: usize,
}

/// Sample mean and `sd / √n`.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt())
}

/// `n` boundary samples `x_i ~ ν` shared by every evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryBatch {
    p: Prime,
    seed: u64,
    samples: Vec<TruncatedPAdic>,
    resampled: usize,
}

impl BoundaryBatch {
    /// Draws the batch; sample `i` comes from the `i`-th derived seed, and
    /// from the resample stream if that draw fails to certify.
    pub fn draw(mu: &StepMeasure, cfg: &BoundaryConfig, n: usize, seed: u64, workers: usize) -> Result<Self> {
        mu.require_padic_contraction()?;
        let draws = par_map(n, workers, |i| {
            let mut last = None;
            for attempt in 0..MAX_RESAMPLES {
                let s = if attempt == 0 {
                    derive_seed(seed, Stream::Boundary, i as u64)
                } else {
                    derive_seed(seed, Stream::Resample, i as u64 * MAX_RESAMPLES + attempt)
                };
                match sample_boundary_padic(mu, cfg, s) {
                    Ok(x) => return Ok((x.value, attempt > 0)),
                    Err(e @ Error::MaxStepsExceeded { .. }) => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last.expect("at least one attempt"))
        });
        let mut samples = Vec::with_capacity(n);
        let mut resampled = 0;
        for d in draws {
            let (x, again) = d?;
            resampled += again as usize;
            samples.push(x);
        }
        Ok(BoundaryBatch {
            p: mu.prime(),
            seed,
            samples,
            resampled,
        })
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn samples(&self) -> &[TruncatedPAdic] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `φ(project(g, x_i))` for every sample.
    pub fn values(&self, phi: &BoundaryObservable, g: &AffineReal) -> Result<Vec<f64>> {
        self.samples
            .iter()
            .map(|x| phi.eval(&project(g, x)?.point))
            .collect()
    }

    pub fn transform(&self, phi: &BoundaryObservable, g: &AffineReal) -> Result<HarmonicEstimate> {
        let (value, stderr) = mean_and_stderr(&self.values(phi, g)?);
        Ok(HarmonicEstimate {
            value,
            stderr,
            n_samples: self.len(),
            seed: self.seed,
            resampled: self.resampled,
        })
    }

    /// `ν̂(p^v Z_p)` on this batch.
    pub fn cylinder_mass(&self, v: i64) -> Result<MassEstimate> {
        let mut hits = 0;
        for x in &self.samples {
            if x.precision() < v {
                return Err(Error::InsufficientPrecision {
                    needed: v,
                    available: x.precision(),
                });
            }
            if x.valuation().map_or(true, |val| val >= v) {
                hits += 1;
            }
        }
        Ok(MassEstimate::from_hits(hits, self.len()))
    }
}

/// Boundary digits needed so that `φ ∘ project(g, ·)` is decidable for
/// every dilation exponent in `ms`.
pub fn digits_for(phi: &BoundaryObservable, ms: impl IntoIterator<Item = i64>, base: i64) -> i64 {
    ms.into_iter()
        .map(|m| required_precision(m).max(phi.required_digits() - m))
        .fold(base, i64::max)
}

/// `f̂_φ(g)` from `n` fresh boundary samples.
pub fn poisson_transform(
    phi: &BoundaryObservable,
    g: &AffineReal,
    mu: &StepMeasure,
    n: usize,
    seed: u64,
    cfg: &BoundaryConfig,
    workers: usize,
) -> Result<HarmonicEstimate> {
    let cfg = cfg.with_digits(digits_for(phi, [g.m()], cfg.digits));
    BoundaryBatch::draw(mu, &cfg, n, seed, workers)?.transform(phi, g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `|mean_i (φ_i(g) − Σ_γ μ(γ) φ_i(gγ))|`.
    pub gap: f64,
    /// Three standard errors of the per-sample difference.
    pub threshold: f64,
    pub n_samples: usize,
    /// Samples on which `project(gγ, x) ≠ project(g, γ·x)`.
    pub reduction_failures: usize,
    pub pass: bool,
}

/// Mean-value check at `g` on a shared batch.
pub fn check_harmonicity_on(
    batch: &BoundaryBatch,
    phi: &BoundaryObservable,
    g: &AffineReal,
    mu: &StepMeasure,
) -> Result<HarmonicityReport> {
    // Weights as integer numerators over a common denominator, so constant
    // observables cancel exactly.
    let denom = mu
        .atoms()
        .iter()
        .fold(BigInt::one(), |acc, a| acc.lcm(a.weight.denom()));
    let denom_f = denom
        .to_f64()
        .ok_or_else(|| Error::InvalidMeasure("weight denominator too large".into()))?;
    let shifted: Vec<(AffineExact, AffineReal, f64)> = mu
        .atoms()
        .iter()
        .map(|a| {
            let num = (a.weight.numer() * (&denom / a.weight.denom())).to_f64().unwrap_or(f64::NAN);
            Ok((a.element.clone(), g.compose_exact(&a.element)?, num))
        })
        .collect::<Result<_>>()?;

    let mut diffs = Vec::with_capacity(batch.len());
    let mut lhs_vals = Vec::with_capacity(batch.len());
    let mut rhs_vals = Vec::with_capacity(batch.len());
    let mut reduction_failures = 0;
    for x in batch.samples() {
        let base = project(g, x)?;
        let here = phi.eval(&base.point)?;
        let mut acc = 0.0;
        for (gamma, g_gamma, num) in &shifted {
            let direct = project(g_gamma, x)?;
            let reduced = project(g, &gamma.act_on_padic(x)?)?;
            if !direct.point.agrees_with(&reduced.point) || direct.gamma != reduced.gamma.compose(gamma)? {
                reduction_failures += 1;
            }
            acc += num * phi.eval(&direct.point)?;
        }
        let there = acc / denom_f;
        lhs_vals.push(here);
        rhs_vals.push(there);
        diffs.push(here - there);
    }
    let (mean_diff, se_diff) = mean_and_stderr(&diffs);
    let gap = mean_diff.abs();
    let threshold = 3.0 * se_diff;
    Ok(HarmonicityReport {
        lhs: mean_and_stderr(&lhs_vals).0,
        rhs: mean_and_stderr(&rhs_vals).0,
        gap,
        threshold,
        n_samples: batch.len(),
        reduction_failures,
        pass: gap <= threshold && reduction_failures == 0,
    })
}

pub fn check_harmonicity(
    phi: &BoundaryObservable,
    g: &AffineReal,
    mu: &StepMeasure,
    n: usize,
    seed: u64,
    cfg: &BoundaryConfig,
    workers: usize,
) -> Result<HarmonicityReport> {
    let ms: Vec<i64> = std::iter::once(g.m())
        .chain(mu.atoms().iter().map(|a| g.m() + a.element.m()))
        .collect();
    let cfg = cfg.with_digits(digits_for(phi, ms, cfg.digits));
    let batch = BoundaryBatch::draw(mu, &cfg, n, seed, workers)?;
    check_harmonicity_on(&batch, phi, g, mu)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub b: f64,
    pub m: i64,
    pub estimate: f64,
    pub stderr: f64,
    /// `ν̂(p^{1−m} Z_p) · 1{b ∈ [0,1)}`.
    pub lower_bound: f64,
    /// `1{b ∈ [0,1) + pZ} + 1 − ν̂(p^{1−m} Z_p)`.
    pub upper_bound: f64,
    pub cylinder_mass: f64,
    pub pass: bool,
}

/// `1{b ∈ [0,1) + pZ}`.
pub fn in_periodic_window(p: Prime, b: &BigRational) -> bool {
    b.floor().to_integer().mod_floor(&p.to_bigint()).is_zero()
}

/// Estimates of `f(b, p^m)` for the worked-example observable on one
/// shared batch, with the two-sided bounds in terms of `ν̂(p^{1−m} Z_p)`.
pub fn worked_example_table_on(
    batch: &BoundaryBatch,
    b_grid: &[BigRational],
    m_range: std::ops::RangeInclusive<i64>,
) -> Result<Vec<TableRow>> {
    let p = batch.prime();
    let phi = BoundaryObservable::WorkedExample;
    let mut rows = Vec::new();
    for b in b_grid {
        let inside = !b.is_negative() && *b < BigRational::one();
        let periodic = in_periodic_window(p, b);
        for m in m_range.clone() {
            let g = AffineReal::from_ratio(p, b.clone(), m);
            let est = batch.transform(&phi, &g)?;
            let nu = batch.cylinder_mass(1 - m)?.estimate;
            let lower_bound = if inside { nu } else { 0.0 };
            let upper_bound = if periodic { 1.0 } else { 0.0 } + (1.0 - nu);
            let tol = 3.0 * est.stderr;
            rows.push(TableRow {
                b: b.to_f64().unwrap_or(f64::NAN),
                m,
                estimate: est.value,
                stderr: est.stderr,
                lower_bound,
                upper_bound,
                cylinder_mass: nu,
                pass: est.value >= lower_bound - tol && est.value <= upper_bound + tol,
            });
        }
    }
    Ok(rows)
}

pub fn worked_example_table(
    mu: &StepMeasure,
    b_grid: &[BigRational],
    m_range: std::ops::RangeInclusive<i64>,
    n: usize,
    seed: u64,
    cfg: &BoundaryConfig,
    workers: usize,
) -> Result<Vec<TableRow>> {
    let phi = BoundaryObservable::WorkedExample;
    let lowest = *m_range.start();
    let digits = digits_for(&phi, m_range.clone(), cfg.digits).max(1 - lowest);
    let batch = BoundaryBatch::draw(mu, &cfg.with_digits(digits), n, seed, workers)?;
    worked_example_table_on(&batch, b_grid, m_range)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub seed: u64,
    /// `(k, f̂(g r_k))` at the checkpoints.
    pub trajectory: Vec<(usize, f64)>,
    pub terminal: f64,
    pub terminal_stderr: f64,
    /// `φ(project(g, bnd(ω)))`.
    pub boundary_value: f64,
    pub tolerance: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub horizon: usize,
    pub n_paths: usize,
    pub inner_samples: usize,
    pub agreements: usize,
    pub fraction: f64,
    pub paths: Vec<PathRecord>,
}

/// Follows `f̂(g r_k(ω))` along sampled paths and compares the value at the
/// horizon with `φ` at the projected boundary point of the same path.
///
/// `f̂` is evaluated on one shared inner batch of `inner` samples; the
/// tolerance is three of its standard errors plus `1/inner`.
#[allow(clippy::too_many_arguments)]
pub fn martingale_limit_probe(
    phi: &BoundaryObservable,
    g: &AffineReal,
    mu: &StepMeasure,
    horizon: usize,
    n_paths: usize,
    inner: usize,
    seed: u64,
    cfg: &BoundaryConfig,
    workers: usize,
) -> Result<MartingaleReport> {
    mu.require_padic_contraction()?;
    let p = mu.prime();
    let checkpoints: Vec<usize> = [0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]
        .into_iter()
        .filter(|&k| k < horizon)
        .chain(std::iter::once(horizon))
        .collect();

    // Paths first, so the inner batch can carry enough digits for every
    // dilation that occurs at a checkpoint.
    let paths: Vec<(u64, Vec<AffineExact>)> = (0..n_paths)
        .map(|j| {
            let s = derive_seed(seed, Stream::Path, j as u64);
            let mut r = AffineExact::identity(p);
            let mut at = Vec::with_capacity(checkpoints.len());
            let mut next = checkpoints.iter().peekable();
            for (k, step) in std::iter::once(None)
                .chain(StepStream::new(mu, s).map(Some))
                .take(horizon + 1)
                .enumerate()
            {
                if let Some(step) = step {
                    r = r.compose(step)?;
                }
                if next.peek() == Some(&&k) {
                    next.next();
                    at.push(r.clone());
                }
            }
            Ok((s, at))
        })
        .collect::<Result<_>>()?;

    let ms = paths
        .iter()
        .flat_map(|(_, at)| at.iter().map(|r| g.m() + r.m()))
        .chain(std::iter::once(g.m()));
    let inner_cfg = cfg.with_digits(digits_for(phi, ms, cfg.digits));
    let batch = BoundaryBatch::draw(mu, &inner_cfg, inner, seed, workers)?;
    let bnd_cfg = cfg.with_digits(digits_for(phi, [g.m()], cfg.digits));

    let records = par_map(paths.len(), workers, |j| {
        let (s, at) = &paths[j];
        let mut trajectory = Vec::with_capacity(at.len());
        let mut last = None;
        for (k, r) in checkpoints.iter().zip(at) {
            let est = batch.transform(phi, &g.compose_exact(r)?)?;
            trajectory.push((*k, est.value));
            last = Some(est);
        }
        let last = last.expect("horizon checkpoint present");
        let z = sample_boundary_padic(mu, &bnd_cfg, *s)?.value;
        let boundary_value = phi.eval(&project(g, &z)?.point)?;
        let tolerance = 3.0 * last.stderr + 1.0 / inner.max(1) as f64;
        Ok(PathRecord {
            seed: *s,
            trajectory,
            terminal: last.value,
            terminal_stderr: last.stderr,
            boundary_value,
            tolerance,
            agree: (last.value - boundary_value).abs() <= tolerance,
        })
    });
    let paths: Vec<PathRecord> = records.into_iter().collect::<Result<_>>()?;
    let agreements = paths.iter().filter(|r| r.agree).count();
    Ok(MartingaleReport {
        horizon,
        n_paths,
        inner_samples: inner,
        agreements,
        fraction: if n_paths == 0 { 1.0 } else { agreements as f64 / n_paths as f64 },
        paths,
    })
}

/// Ratios `stderr(2n) / stderr(n)` over `trials` independent seed pairs.
#[allow(clippy::too_many_arguments)]
pub fn stderr_scaling(
    phi: &BoundaryObservable,
    g: &AffineReal,
    mu: &StepMeasure,
    n: usize,
    trials: usize,
    seed: u64,
    cfg: &BoundaryConfig,
    workers: usize,
) -> Result<Vec<f64>> {
    (0..trials as u64)
        .map(|t| {
            let s1 = derive_seed(seed, Stream::Fixture, 2 * t);
            let s2 = derive_seed(seed, Stream::Fixture, 2 * t + 1);
            let a = poisson_transform(phi, g, mu, n, s1, cfg, workers)?;
            let b = poisson_transform(phi, g, mu, 2 * n, s2, cfg, workers)?;
            Ok(if a.stderr > 0.0 { b.stderr / a.stderr } else { f64::NAN })
        })
        .collect()
}
