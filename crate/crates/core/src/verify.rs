//! The invariant suites behind `verify-all`.
//!
//! Each suite is deterministic in `(μ, sizes, seed)`; the report never
//! records timings or the worker count, so it is byte-identical across
//! reruns.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;
use crate::group::AffineExact;
use crate::group::AffineReal;
use crate::harmonic::{
    check_harmonicity_on, digits_for, martingale_limit_probe, mean_and_stderr, stderr_scaling,
    worked_example_table_on, BoundaryBatch, BoundaryObservable,
};
use crate::measure::{Place, RationalAtom, RationalStepMeasure, StepMeasure};
use crate::padic::{PAdicRational, Prime, TruncatedPAdic};
use crate::seed::{derive_seed, rng_from_seed, Stream};
use crate::solenoid::{
    act_exact, count_fractional_representatives, fundamental_domain_uniqueness, project,
    star_invariance_check, SearchBound,
};
use crate::walk::{draw_boundary_batch, replay_digits, BoundaryConfig, StepSampler};

/// Sample sizes for each suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VerifySizes {
    pub arithmetic: usize,
    pub uniqueness: usize,
    pub star: usize,
    pub sampler: usize,
    pub stationarity: usize,
    pub harmonic: usize,
    pub periodicity_cases: usize,
    pub table: usize,
    pub paths: usize,
    pub horizon: usize,
    pub inner: usize,
}

impl VerifySizes {
    pub fn full() -> Self {
        VerifySizes {
            arithmetic: 10_000,
            uniqueness: 1_000,
            star: 10_000,
            sampler: 1_000,
            stationarity: 20_000,
            harmonic: 100_000,
            periodicity_cases: 20,
            table: 100_000,
            paths: 100,
            horizon: 200,
            inner: 2_000,
        }
    }

    pub fn quick() -> Self {
        VerifySizes {
            arithmetic: 1_000,
            uniqueness: 100,
            star: 1_000,
            sampler: 200,
            stationarity: 2_000,
            harmonic: 5_000,
            periodicity_cases: 20,
            table: 5_000,
            paths: 40,
            horizon: 200,
            inner: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub pass: bool,
    pub cases: usize,
    pub failures: usize,
    pub detail: Value,
}

impl SuiteReport {
    fn new(name: &str, cases: usize, failures: usize, detail: Value) -> Self {
        SuiteReport {
            name: name.to_string(),
            pass: failures == 0,
            cases,
            failures,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub prime: u32,
    pub seed: u64,
    pub sizes: VerifySizes,
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn suite_rng(seed: u64, suite: u64) -> ChaCha8Rng {
    rng_from_seed(derive_seed(seed, Stream::Fixture, 1_000 + suite))
}

/// A random element of `Z[1/p]` with valuation anywhere in `[-12, 6]`.
pub fn random_value(rng: &mut impl Rng, p: Prime) -> PAdicRational {
    let n: i64 = rng.gen_range(-1_000_000..=1_000_000);
    let e: u32 = rng.gen_range(0..=12);
    let shift: i64 = if rng.gen_bool(0.3) { rng.gen_range(0..=6) } else { 0 };
    PAdicRational::new(p, BigInt::from(n), e).mul_by_power(shift)
}

/// Ultrametric inequality, norm multiplicativity, the `α` contract and
/// truncation round trips on random values for `p = 2` and `p = 3`.
pub fn arithmetic_suite(n: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = suite_rng(seed, 1);
    let mut fail = [0usize; 4];
    let one = BigRational::one();
    for i in 0..n {
        let p = Prime::new(if i % 2 == 0 { 2 } else { 3 })?;
        let x = random_value(&mut rng, p);
        let y = random_value(&mut rng, p);
        let (nx, ny) = (x.norm(), y.norm());
        let nsum = x.checked_add(&y)?.norm();
        let max = if nx > ny { nx.clone() } else { ny.clone() };
        if nsum > max || (nx != ny && nsum != max) {
            fail[0] += 1;
        }
        if x.checked_mul(&y)?.norm() != &nx * &ny {
            fail[1] += 1;
        }
        let a = x.frac_part();
        let ar = a.to_ratio();
        let integral = x.checked_sub(&a)?.valuation().finite().map_or(true, |v| v >= 0);
        if ar.is_negative() || ar >= one || !integral {
            fail[2] += 1;
        }
        let prec = rng.gen_range(-4..=10);
        let lhs = TruncatedPAdic::reduce(&x, prec).add(&TruncatedPAdic::reduce(&y, prec))?;
        if lhs != TruncatedPAdic::reduce(&x.checked_add(&y)?, prec) {
            fail[3] += 1;
        }
    }
    Ok(SuiteReport::new(
        "arithmetic",
        n,
        fail.iter().sum(),
        json!({
            "ultrametric_failures": fail[0],
            "multiplicativity_failures": fail[1],
            "alpha_failures": fail[2],
            "round_trip_failures": fail[3],
        }),
    ))
}

/// A random `(g, x)` whose projection lies inside the default search set.
pub fn random_searchable_pair(rng: &mut impl Rng, p: Prime) -> (AffineReal, PAdicRational) {
    let (e_max, b_range) = if p.get() == 2 { (3u32, 4i64) } else { (2u32, 3i64) };
    let m: i64 = rng.gen_range(-3..=3);
    let ey = rng.gen_range(0..=e_max);
    let y = PAdicRational::new(p, BigInt::from(rng.gen_range(-500i64..=500)), ey);
    let x = y.mul_by_power(-m);
    let eb = rng.gen_range(0..=e_max);
    let scale = p.pow(eb);
    let lo = BigInt::from(-b_range) * &scale;
    let hi = BigInt::from(b_range) * &scale;
    let span = (&hi - &lo).to_string().parse::<i64>().unwrap_or(1);
    let j = &lo + BigInt::from(rng.gen_range(0..span));
    let b = BigRational::new(j, scale);
    (AffineReal::from_ratio(p, b, m), x)
}

/// Brute-force search finds exactly one `γ` taking `(g, x)` into `Δ`, and it
/// is the one `project` returns.
pub fn uniqueness_suite(n: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = suite_rng(seed, 2);
    let mut failures = 0;
    let mut wide_failures = 0;
    let wide = SearchBound {
        max_abs_numerator: 128,
        max_exponent: 8,
        exponent_spread: 3,
    };
    let mut wide_cases = 0;
    for i in 0..n {
        let p = Prime::new(if i % 2 == 0 { 2 } else { 3 })?;
        let (g, x) = random_searchable_pair(&mut rng, p);
        let found = fundamental_domain_uniqueness(&g, &x, SearchBound::default())?;
        let projected = project(&g, &TruncatedPAdic::reduce(&x, 16))?;
        if found.count != 1 || found.solutions[0] != projected.gamma {
            failures += 1;
        }
        if i % 20 == 0 {
            wide_cases += 1;
            if fundamental_domain_uniqueness(&g, &x, wide)?.count != 1 {
                wide_failures += 1;
            }
        }
    }
    Ok(SuiteReport::new(
        "fundamental-domain-uniqueness",
        n + wide_cases,
        failures + wide_failures,
        json!({ "search_failures": failures, "wide_cases": wide_cases, "wide_failures": wide_failures }),
    ))
}

/// A word of length `1..=max_len` in the support of `μ`.
pub fn random_support_word(rng: &mut impl Rng, mu: &StepMeasure, max_len: usize) -> Result<AffineExact> {
    let len = rng.gen_range(1..=max_len);
    let atoms = mu.atoms();
    let mut w = AffineExact::identity(mu.prime());
    for _ in 0..len {
        w = w.compose(&atoms[rng.gen_range(0..atoms.len())].element)?;
    }
    Ok(w)
}

/// `project(g γ⁻¹, γ·x) = project(g, x)` on random triples.
pub fn star_suite(mu: &StepMeasure, n: usize, seed: u64) -> Result<SuiteReport> {
    let p = mu.prime();
    let mut rng = suite_rng(seed, 3);
    let mut failures = 0;
    for i in 0..n {
        let b: f64 = if i % 10 == 0 {
            rng.gen_range(-1.0e6..1.0e6)
        } else {
            rng.gen_range(-8.0..8.0)
        };
        let g = AffineReal::new(p, b, rng.gen_range(-4..=4))?;
        let x = TruncatedPAdic::reduce(&random_value(&mut rng, p), 24);
        let gamma = random_support_word(&mut rng, mu, 5)?;
        if !star_invariance_check(&g, &x, &gamma)? {
            failures += 1;
        }
    }
    Ok(SuiteReport::new("star-invariance", n, failures, json!({})))
}

/// Exact drift coefficients of `μ`, and the spectrum of the rational
/// measure with `a = 3/2` (weight 2/3) and `a = 2/3` (weight 1/3).
pub fn drift_suite(mu: &StepMeasure) -> SuiteReport {
    let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let mut failures = 0;
    let dp = mu.drift_p();
    let di = mu.drift_inf();
    if &dp.coeff + &di.coeff != BigRational::zero() {
        failures += 1;
    }
    let is_reference = *mu == StepMeasure::mu_star(mu.prime());
    if is_reference && dp.coeff != r(-1, 3) {
        failures += 1;
    }
    let rational = RationalStepMeasure::new(vec![
        RationalAtom { b: BigRational::zero(), a: r(3, 2), weight: r(2, 3) },
        RationalAtom { b: BigRational::one(), a: r(2, 3), weight: r(1, 3) },
    ])
    .expect("fixed rational measure is valid");
    let spec = rational.boundary_spectrum();
    let coeff = |place| spec.drift(place).map(|d| d.coeff.clone());
    if spec.components != vec![Place::Prime(3)]
        || coeff(Place::Prime(2)) != Some(r(1, 3))
        || coeff(Place::Prime(3)) != Some(r(-1, 3))
        || coeff(Place::Infinity) != Some(r(1, 3))
        || spec.drift(Place::Infinity).map(|d| d.log_base.clone()) != Some(r(3, 2))
    {
        failures += 1;
    }
    let as_rational = mu.to_rational().boundary_spectrum();
    let expected_components = if dp.is_negative() {
        vec![Place::Prime(mu.prime().get())]
    } else if di.is_negative() {
        vec![Place::Infinity]
    } else {
        vec![]
    };
    if as_rational.components != expected_components {
        failures += 1;
    }
    SuiteReport::new(
        "drift",
        4,
        failures,
        json!({
            "drift_p": dp.to_json(),
            "drift_inf": di.to_json(),
            "spectrum": spec.to_json(),
        }),
    )
}

/// Two-sided χ² critical value at level 0.01.
fn chi2_critical_01(df: usize) -> f64 {
    const TABLE: [f64; 6] = [6.635, 9.210, 11.345, 13.277, 15.086, 16.812];
    if (1..=TABLE.len()).contains(&df) {
        return TABLE[df - 1];
    }
    // Wilson-Hilferty
    let k = df as f64;
    let z = 2.326_347_874;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

/// Certified digits survive a replay with four times the step budget; two
/// independent batches agree on the law of `d_0`.
pub fn sampler_suite(mu: &StepMeasure, cfg: &BoundaryConfig, n: usize, seed: u64, workers: usize) -> Result<SuiteReport> {
    let p = mu.prime();
    let a = draw_boundary_batch(mu, cfg, n, derive_seed(seed, Stream::Fixture, 1), workers)?;
    let b = draw_boundary_batch(mu, cfg, n, derive_seed(seed, Stream::Fixture, 2), workers)?;
    let replays = crate::seed::par_map(n, workers, |i| {
        replay_digits(mu, a[i].seed, 4 * cfg.max_steps, cfg.digits).map(|r| r == a[i].value)
    });
    let mut changed = 0;
    for r in replays {
        if !r? {
            changed += 1;
        }
    }
    let d0 = |s: &crate::walk::BoundarySample| s.value.digit(0).unwrap_or(0) as usize;
    let pu = p.get() as usize;
    let mut counts = vec![[0usize; 2]; pu];
    for s in &a {
        counts[d0(s)][0] += 1;
    }
    for s in &b {
        counts[d0(s)][1] += 1;
    }
    let f = |c: usize| c as f64 / n as f64;
    let (fa, fb) = (f(counts[0][0]), f(counts[0][1]));
    let pooled = (fa + fb) / 2.0;
    let sigma = (pooled * (1.0 - pooled) * 2.0 / n as f64).sqrt();
    let freq_ok = (fa - fb).abs() <= 3.0 * sigma;
    let mut chi2 = 0.0;
    let mut df = 0usize;
    for row in &counts {
        let total = (row[0] + row[1]) as f64;
        if total == 0.0 {
            continue;
        }
        df += 1;
        for &c in row {
            let expected = total / 2.0;
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
    }
    let df = df.saturating_sub(1);
    let chi2_ok = df == 0 || chi2 <= chi2_critical_01(df);
    let failures = changed + (!freq_ok) as usize + (!chi2_ok) as usize;
    Ok(SuiteReport::new(
        "boundary-sampler",
        n + 2,
        failures,
        json!({
            "digits": cfg.digits,
            "window": cfg.window,
            "slack": cfg.slack,
            "replay_steps": 4 * cfg.max_steps,
            "changed_digits": changed,
            "d0_zero_freq": [fa, fb],
            "three_sigma": 3.0 * sigma,
            "chi2": chi2,
            "chi2_df": df,
        }),
    ))
}

/// `ν̃` is `μ`-stationary for the action on `Δ`, and
/// `act(γ, project(e, x)) = project(e, γ·x)` on every sample.
pub fn stationarity_suite(mu: &StepMeasure, cfg: &BoundaryConfig, n: usize, seed: u64, workers: usize) -> Result<SuiteReport> {
    let p = mu.prime();
    let observables = vec![
        BoundaryObservable::WorkedExample,
        BoundaryObservable::cylinder(0, vec![1], 0.0, 0.5)?,
        BoundaryObservable::cylinder(1, vec![0, 1], 0.0, 1.0)?,
        BoundaryObservable::cylinder(0, vec![0], 0.25, 0.75)?,
    ];
    let lowest = mu.atoms().iter().map(|a| a.element.m()).min().unwrap_or(0);
    let digits = observables
        .iter()
        .map(|o| digits_for(o, [lowest], cfg.digits))
        .max()
        .unwrap_or(cfg.digits);
    let batch = BoundaryBatch::draw(mu, &cfg.with_digits(digits), n, derive_seed(seed, Stream::Fixture, 3), workers)?;
    let sampler = StepSampler::new(mu);
    let mut rng = suite_rng(seed, 6);
    let e = AffineReal::identity(p);
    let mut equivariance_failures = 0;
    let mut pairs = Vec::with_capacity(n);
    for x in batch.samples() {
        let gamma = sampler.sample(&mut rng);
        let s = project(&e, x)?.point;
        let moved = act_exact(gamma, &s)?;
        if !moved.agrees_with(&project(&e, &gamma.act_on_padic(x)?)?.point) {
            equivariance_failures += 1;
        }
        pairs.push((s, moved));
    }
    let mut stat_failures = 0;
    let mut rows = Vec::new();
    for (i, phi) in observables.iter().enumerate() {
        let mut diffs = Vec::with_capacity(n);
        let mut base = Vec::with_capacity(n);
        for (s, t) in &pairs {
            let v = phi.eval(s)?;
            diffs.push(phi.eval(t)? - v);
            base.push(v);
        }
        let (mean, se) = mean_and_stderr(&diffs);
        let ok = mean.abs() <= 3.0 * se;
        stat_failures += (!ok) as usize;
        rows.push(json!({
            "observable": i,
            "mean": mean_and_stderr(&base).0,
            "diff": mean,
            "three_sigma": 3.0 * se,
            "pass": ok,
        }));
    }
    Ok(SuiteReport::new(
        "stationarity",
        n + observables.len(),
        equivariance_failures + stat_failures,
        json!({ "equivariance_failures": equivariance_failures, "observables": rows }),
    ))
}

/// Harmonicity of the worked-example transform at three base points.
pub fn harmonicity_suite(mu: &StepMeasure, cfg: &BoundaryConfig, n: usize, seed: u64, workers: usize) -> Result<SuiteReport> {
    let p = mu.prime();
    let phi = BoundaryObservable::WorkedExample;
    let points = [(0.3, 0), (0.5, 1), (1.7, -1)];
    let ms = points
        .iter()
        .flat_map(|&(_, m)| std::iter::once(m).chain(mu.atoms().iter().map(move |a| m + a.element.m())));
    let digits = digits_for(&phi, ms, cfg.digits);
    let batch = BoundaryBatch::draw(mu, &cfg.with_digits(digits), n, derive_seed(seed, Stream::Fixture, 4), workers)?;
    let mut failures = 0;
    let mut rows = Vec::new();
    for (b, m) in points {
        let g = AffineReal::new(p, b, m)?;
        let rep = check_harmonicity_on(&batch, &phi, &g, mu)?;
        failures += (!rep.pass) as usize;
        rows.push(json!({ "b": b, "m": m, "report": rep }));
    }
    Ok(SuiteReport::new(
        "harmonicity",
        points.len(),
        failures,
        json!({ "n": n, "resampled": batch_resampled(&batch), "points": rows }),
    ))
}

fn batch_resampled(batch: &BoundaryBatch) -> usize {
    batch.transform(&BoundaryObservable::Constant(0.0), &AffineReal::identity(batch.prime()))
        .map(|e| e.resampled)
        .unwrap_or(0)
}

/// `f̂(b, p^m)` and `f̂(b + p, p^m)` are bit-identical on a shared batch.
pub fn periodicity_suite(mu: &StepMeasure, cfg: &BoundaryConfig, cases: usize, n: usize, seed: u64, workers: usize) -> Result<SuiteReport> {
    let p = mu.prime();
    let phi = BoundaryObservable::WorkedExample;
    let mut rng = suite_rng(seed, 7);
    let draws: Vec<(f64, i64)> = (0..cases)
        .map(|_| (rng.gen_range(-4.0..4.0), rng.gen_range(-3..=8)))
        .collect();
    let digits = digits_for(&phi, draws.iter().map(|d| d.1), cfg.digits);
    let batch = BoundaryBatch::draw(mu, &cfg.with_digits(digits), n, derive_seed(seed, Stream::Fixture, 5), workers)?;
    let shift = BigRational::from_integer(p.to_bigint());
    let mut failures = 0;
    let mut rows = Vec::new();
    for (b, m) in draws {
        let g = AffineReal::new(p, b, m)?;
        let a = batch.transform(&phi, &g)?;
        let c = batch.transform(&phi, &g.translated(&shift))?;
        let same = a.value.to_bits() == c.value.to_bits() && a.stderr.to_bits() == c.stderr.to_bits();
        failures += (!same) as usize;
        rows.push(json!({ "b": b, "m": m, "estimate": a.value, "shifted": c.value }));
    }
    Ok(SuiteReport::new("periodicity", cases, failures, json!({ "cases": rows })))
}

/// Translations on the table grid: three inside `[0,1)` and the ones in
/// `(1, p)` with half-integer offsets, which avoid `[0,1) + pZ`.
pub fn default_b_grid(p: Prime) -> Vec<BigRational> {
    let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let mut grid = vec![r(1, 4), r(1, 2), r(3, 4)];
    for k in 1..p.get() as i64 {
        grid.push(r(2 * k + 1, 2));
    }
    grid
}

/// The worked-example table on the default grid with `m = 1..=8`: every
/// row within its bounds, `ν̂(p^{1−m} Z_p)` nondecreasing and at least 0.99
/// at `m = 8`. Also checks the at-most-one-`β` fact by bounded search.
pub fn limit_suite(mu: &StepMeasure, cfg: &BoundaryConfig, n: usize, seed: u64, workers: usize) -> Result<SuiteReport> {
    let p = mu.prime();
    let phi = BoundaryObservable::WorkedExample;
    let digits = digits_for(&phi, 1..=8, cfg.digits);
    let batch = BoundaryBatch::draw(mu, &cfg.with_digits(digits), n, derive_seed(seed, Stream::Fixture, 6), workers)?;
    let grid = default_b_grid(p);
    let rows = worked_example_table_on(&batch, &grid, 1..=8)?;
    let bound_failures = rows.iter().filter(|r| !r.pass).count();
    let masses: Vec<f64> = (1..=8).map(|m| batch.cylinder_mass(1 - m).map(|e| e.estimate)).collect::<Result<_>>()?;
    let monotone = masses.windows(2).all(|w| w[0] <= w[1]);
    let reaches = masses.last().copied().unwrap_or(0.0) >= 0.99;
    let mut beta_failures = 0;
    for x in batch.samples().iter().take(200) {
        let exact = x.to_rational();
        if exact.valuation().finite().map_or(false, |v| v >= -6) && count_fractional_representatives(&exact, 6)? != 1 {
            beta_failures += 1;
        }
    }
    let failures = bound_failures + (!monotone) as usize + (!reaches) as usize + beta_failures;
    Ok(SuiteReport::new(
        "limit-bounds",
        rows.len() + 2,
        failures,
        json!({
            "cylinder_mass": masses,
            "monotone": monotone,
            "reaches_0_99": reaches,
            "beta_failures": beta_failures,
            "rows": rows,
        }),
    ))
}

/// `f̂(g r_k(ω))` at the horizon agrees with `φ(project(g, bnd(ω)))` on at
/// least 95% of paths.
pub fn martingale_suite(mu: &StepMeasure, cfg: &BoundaryConfig, sizes: &VerifySizes, seed: u64, workers: usize) -> Result<SuiteReport> {
    let g = AffineReal::new(mu.prime(), 0.5, 0)?;
    let rep = martingale_limit_probe(
        &BoundaryObservable::WorkedExample,
        &g,
        mu,
        sizes.horizon,
        sizes.paths,
        sizes.inner,
        derive_seed(seed, Stream::Fixture, 7),
        cfg,
        workers,
    )?;
    let pass = rep.fraction >= 0.95;
    Ok(SuiteReport::new(
        "martingale-limit",
        rep.n_paths,
        (!pass) as usize,
        json!({
            "agreements": rep.agreements,
            "fraction": rep.fraction,
            "horizon": rep.horizon,
            "inner_samples": rep.inner_samples,
        }),
    ))
}

/// Doubling `n` shrinks the standard error by a factor in `[0.6, 0.8]`.
pub fn scaling_suite(mu: &StepMeasure, cfg: &BoundaryConfig, n: usize, seed: u64, workers: usize) -> Result<SuiteReport> {
    let g = AffineReal::new(mu.prime(), 0.5, 0)?;
    let ratios = stderr_scaling(&BoundaryObservable::WorkedExample, &g, mu, n, 5, seed, cfg, workers)?;
    let failures = ratios.iter().filter(|r| !(0.6..=0.8).contains(*r)).count();
    Ok(SuiteReport::new("stderr-scaling", ratios.len(), failures, json!({ "ratios": ratios })))
}

/// Runs every suite on `μ`.
pub fn verify_all(mu: &StepMeasure, sizes: &VerifySizes, seed: u64, workers: usize) -> Result<VerifyReport> {
    mu.require_padic_contraction()?;
    let cfg = BoundaryConfig::default();
    let suites = vec![
        arithmetic_suite(sizes.arithmetic, seed)?,
        uniqueness_suite(sizes.uniqueness, seed)?,
        star_suite(mu, sizes.star, seed)?,
        drift_suite(mu),
        sampler_suite(mu, &cfg, sizes.sampler, seed, workers)?,
        stationarity_suite(mu, &cfg, sizes.stationarity, seed, workers)?,
        harmonicity_suite(mu, &cfg, sizes.harmonic, seed, workers)?,
        periodicity_suite(mu, &cfg, sizes.periodicity_cases, sizes.table.min(sizes.harmonic), seed, workers)?,
        limit_suite(mu, &cfg, sizes.table, seed, workers)?,
        martingale_suite(mu, &cfg, sizes, seed, workers)?,
        scaling_suite(mu, &cfg, (sizes.harmonic / 10).max(1_000), seed, workers)?,
    ];
    Ok(VerifyReport {
        prime: mu.prime().get(),
        seed,
        sizes: *sizes,
        pass: suites.iter().all(|s| s.pass),
        suites,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn searchable_pairs_stay_inside_the_search_set() {
        let mut rng = rng_from_seed(3);
        for i in 0..100 {
            let p = Prime::new(if i % 2 == 0 { 2 } else { 3 }).unwrap();
            let (g, x) = random_searchable_pair(&mut rng, p);
            let k = project(&g, &TruncatedPAdic::reduce(&x, 16)).unwrap().gamma;
            let e = (-k.b().valuation().finite().unwrap_or(0)).max(0);
            assert!(e <= 6);
            let scaled = k.b().mul_by_power(e);
            assert!(scaled.to_ratio().abs() <= BigRational::from_integer(64.into()));
        }
    }

    #[test]
    fn quick_suites_pass() {
        let mu = StepMeasure::mu_star(Prime::new(2).unwrap());
        let rep = verify_all(&mu, &VerifySizes::quick(), 11, 0).unwrap();
        for s in &rep.suites {
            assert!(s.pass, "{} failed: {}", s.name, s.detail);
        }
    }

    #[test]
    fn grid_avoids_the_periodic_window() {
        for p in [2u64, 3, 5] {
            let p = Prime::new(p).unwrap();
            let grid = default_b_grid(p);
            assert_eq!(grid.len(), 3 + p.get() as usize - 1);
            for b in &grid[3..] {
                assert!(!crate::harmonic::in_periodic_window(p, b));
            }
        }
    }

    #[test]
    fn chi2_table_and_approximation_meet() {
        let approx = {
            let k = 6.0f64;
            let z = 2.326_347_874;
            k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
        };
        assert!((approx - chi2_critical_01(6)).abs() < 0.1);
    }
}
