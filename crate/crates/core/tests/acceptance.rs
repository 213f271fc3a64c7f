//! Acceptance gate: one line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::Rng;
use solenoid_core::measure::{Place, RationalAtom, RationalStepMeasure, StepMeasure};
use solenoid_core::padic::{PAdicRational, Prime, Valuation};
use solenoid_core::seed::rng_from_seed;
use solenoid_core::verify::{
    arithmetic_suite, harmonicity_suite, limit_suite, martingale_suite, periodicity_suite,
    sampler_suite, star_suite, uniqueness_suite, verify_all, SuiteReport,
    VerifySizes,
};
use solenoid_core::walk::BoundaryConfig;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn from_suite(r: SuiteReport) -> Outcome {
    let mut detail = r.detail;
    if let Some(map) = detail.as_object_mut() {
        for bulky in ["rows", "cases"] {
            map.remove(bulky);
        }
    }
    Outcome {
        pass: r.pass,
        detail: format!("{} cases, {} failures, {detail}", r.cases, r.failures),
    }
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// `v_p(n / p^e)` by repeated division on machine integers.
fn valuation_oracle(p: i128, mut n: i128, e: i64) -> Option<i64> {
    if n == 0 {
        return None;
    }
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    Some(v - e)
}

fn c1_arithmetic() -> Outcome {
    let suite = arithmetic_suite(10_000, SEED).expect("arithmetic suite runs");
    let mut rng = rng_from_seed(SEED);
    let mut oracle_failures = 0;
    for i in 0..10_000 {
        let p: u64 = if i % 2 == 0 { 2 } else { 3 };
        let n: i64 = rng.gen_range(-1_000_000..=1_000_000);
        let e: u32 = rng.gen_range(0..=12);
        let x = PAdicRational::new(Prime::new(p).unwrap(), n.into(), e);
        let expected = valuation_oracle(p as i128, n as i128, e as i64);
        let got = match x.valuation() {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        };
        if got != expected {
            oracle_failures += 1;
        }
    }
    Outcome {
        pass: suite.pass && oracle_failures == 0,
        detail: format!(
            "laws: {} failures over {} pairs; valuation oracle: {oracle_failures} mismatches",
            suite.failures, suite.cases
        ),
    }
}

fn c4_drift() -> Outcome {
    let mut bad = Vec::new();
    for p in [2u64, 3, 5] {
        let prime = Prime::new(p).unwrap();
        let d = StepMeasure::mu_star(prime).drift_p();
        if d.coeff != ratio(-1, 3) || d.log_base != BigRational::from_integer(p.into()) {
            bad.push(format!("p={p}: coeff {}", d.coeff));
        }
        if (d.value + (p as f64).ln() / 3.0).abs() > 1e-15 {
            bad.push(format!("p={p}: value {}", d.value));
        }
    }
    let rational = RationalStepMeasure::new(vec![
        RationalAtom { b: ratio(0, 1), a: ratio(3, 2), weight: ratio(2, 3) },
        RationalAtom { b: ratio(1, 1), a: ratio(2, 3), weight: ratio(1, 3) },
    ])
    .unwrap();
    let spec = rational.boundary_spectrum();
    let coeff = |pl| spec.drift(pl).map(|d| d.coeff.clone());
    if spec.components != vec![Place::Prime(3)] {
        bad.push(format!("components {:?}", spec.components));
    }
    if coeff(Place::Prime(2)) != Some(ratio(1, 3))
        || coeff(Place::Prime(3)) != Some(ratio(-1, 3))
        || coeff(Place::Infinity) != Some(ratio(1, 3))
    {
        bad.push(format!("spectrum {}", spec.to_json()));
    }
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            "exact coefficients -1/3; spectrum {Q_3} with +1/3, -1/3, +1/3".into()
        } else {
            bad.join("; ")
        },
    }
}

fn c10_reproducible() -> Outcome {
    let mu = StepMeasure::mu_star(Prime::new(2).unwrap());
    let sizes = VerifySizes::quick();
    let a = verify_all(&mu, &sizes, SEED, 1).unwrap().to_json_string();
    let b = verify_all(&mu, &sizes, SEED, 4).unwrap().to_json_string();
    let c = verify_all(&mu, &sizes, SEED, 0).unwrap().to_json_string();
    Outcome {
        pass: a == b && b == c,
        detail: format!("{} bytes; workers 1/4/auto identical: {}", a.len(), a == b && b == c),
    }
}

fn main() -> ExitCode {
    let mu = StepMeasure::mu_star(Prime::new(2).unwrap());
    let cfg = BoundaryConfig::default();
    let full = VerifySizes::full();
    let criteria: Vec<(&str, Duration, Box<dyn Fn() -> Outcome>)> = vec![
        ("exact arithmetic laws", Duration::from_secs(5), Box::new(c1_arithmetic)),
        (
            "fundamental-domain uniqueness",
            Duration::from_secs(30),
            Box::new(|| from_suite(uniqueness_suite(1_000, SEED).unwrap())),
        ),
        (
            "star invariance",
            Duration::MAX,
            Box::new(|| from_suite(star_suite(&mu, 10_000, SEED).unwrap())),
        ),
        ("drift exactness", Duration::MAX, Box::new(c4_drift)),
        (
            "boundary sampler soundness",
            Duration::from_secs(120),
            Box::new(|| from_suite(sampler_suite(&mu, &cfg, 1_000, SEED, 0).unwrap())),
        ),
        (
            "harmonicity",
            Duration::from_secs(300),
            Box::new(|| from_suite(harmonicity_suite(&mu, &cfg, 100_000, SEED, 0).unwrap())),
        ),
        (
            "periodicity",
            Duration::MAX,
            Box::new(|| from_suite(periodicity_suite(&mu, &cfg, 20, 20_000, SEED, 0).unwrap())),
        ),
        (
            "limit dichotomy bounds",
            Duration::from_secs(600),
            Box::new(|| from_suite(limit_suite(&mu, &cfg, 100_000, SEED, 0).unwrap())),
        ),
        (
            "martingale limit probe",
            Duration::from_secs(600),
            Box::new(|| from_suite(martingale_suite(&mu, &cfg, &full, SEED, 0).unwrap())),
        ),
        ("reproducibility", Duration::MAX, Box::new(c10_reproducible)),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took <= *budget;
        let pass = out.pass && in_time;
        failed += (!pass) as usize;
        let budget_note = if *budget == Duration::MAX {
            String::new()
        } else {
            format!(" / {}s", budget.as_secs())
        };
        println!(
            "{} {:>2} {name} ({:.2}s{budget_note}): {}",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64(),
            out.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
