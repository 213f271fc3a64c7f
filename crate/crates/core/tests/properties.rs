use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use solenoid_core::group::{AffineExact, AffineReal};
use solenoid_core::measure::{RationalAtom, RationalStepMeasure, StepMeasure};
use solenoid_core::padic::{PAdicRational, Prime, TruncatedPAdic};
use solenoid_core::solenoid::{act, act_exact, project, star_invariance_check, SolenoidPoint};
use solenoid_core::walk::{exact_partial_sum, run_walk};

fn prime_strategy() -> impl Strategy<Value = Prime> {
    prop_oneof![Just(2u64), Just(3), Just(5), Just(7)].prop_map(|p| Prime::new(p).unwrap())
}

fn value(p: Prime) -> impl Strategy<Value = PAdicRational> {
    (-100_000i64..=100_000, 0u32..10, -4i64..=4)
        .prop_map(move |(n, e, s)| PAdicRational::new(p, BigInt::from(n), e).mul_by_power(s))
}

fn element(p: Prime) -> impl Strategy<Value = AffineExact> {
    (value(p), -5i64..=5).prop_map(|(b, m)| AffineExact::new(b, m))
}

fn real_element(p: Prime) -> impl Strategy<Value = AffineReal> {
    (-50.0f64..50.0, -5i64..=5).prop_map(move |(b, m)| AffineReal::new(p, b, m).unwrap())
}

fn with_prime<S: Strategy, F: Fn(Prime) -> S>(f: F) -> impl Strategy<Value = (Prime, S::Value)> {
    prime_strategy().prop_flat_map(move |p| (Just(p), f(p)))
}

fn is_integral(x: &PAdicRational) -> bool {
    x.valuation().finite().map_or(true, |v| v >= 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ultrametric((_p, (x, y)) in with_prime(|p| (value(p), value(p)))) {
        let (nx, ny) = (x.norm(), y.norm());
        let ns = x.checked_add(&y).unwrap().norm();
        let max = if nx > ny { nx.clone() } else { ny.clone() };
        prop_assert!(ns <= max);
        if nx != ny {
            prop_assert_eq!(ns, max);
        }
    }

    #[test]
    fn norm_is_multiplicative((_p, (x, y)) in with_prime(|p| (value(p), value(p)))) {
        prop_assert_eq!(x.checked_mul(&y).unwrap().norm(), x.norm() * y.norm());
    }

    #[test]
    fn alpha_contract((_p, x) in with_prime(value)) {
        let a = x.frac_part();
        let r = a.to_ratio();
        prop_assert!(!r.is_negative() && r < BigRational::one());
        prop_assert!(is_integral(&x.checked_sub(&a).unwrap()));
        prop_assert_eq!(a.frac_part(), a.clone());
        // α agrees with the real fractional part
        prop_assert_eq!(r, x.to_ratio() - x.to_ratio().floor());
    }

    #[test]
    fn truncation_commutes_with_addition(
        (_p, (x, y, n)) in with_prime(|p| (value(p), value(p), -6i64..12))
    ) {
        let lhs = TruncatedPAdic::reduce(&x, n).add(&TruncatedPAdic::reduce(&y, n)).unwrap();
        prop_assert_eq!(lhs, TruncatedPAdic::reduce(&x.checked_add(&y).unwrap(), n));
        let shifted = TruncatedPAdic::reduce(&x, n).shift(3);
        prop_assert_eq!(shifted, TruncatedPAdic::reduce(&x.mul_by_power(3), n + 3));
    }

    #[test]
    fn truncation_round_trip((_p, (x, n)) in with_prime(|p| (value(p), -6i64..12))) {
        let t = TruncatedPAdic::reduce(&x, n);
        let back = t.to_rational();
        let diff = x.checked_sub(&back).unwrap();
        prop_assert!(diff.valuation().finite().map_or(true, |v| v >= n));
        prop_assert_eq!(t.to_string().parse::<TruncatedPAdic>().unwrap(), t);
    }

    #[test]
    fn compose_is_associative((_p, (a, b, c)) in with_prime(|p| (element(p), element(p), element(p)))) {
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        prop_assert!(a.compose(&a.inverse()).unwrap().is_identity());
        prop_assert_eq!(
            a.compose(&b).unwrap().dilation_norm(),
            a.dilation_norm() * b.dilation_norm()
        );
    }

    #[test]
    fn real_action_is_compatible(
        (_p, (g, h, t)) in with_prime(|p| (real_element(p), real_element(p), -10.0f64..10.0))
    ) {
        let lhs = g.act_on_real(h.act_on_real(t));
        let rhs = g.compose(&h).unwrap().act_on_real(t);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn padic_action_is_compatible(
        (_p, (a, b, x)) in with_prime(|p| (element(p), element(p), value(p)))
    ) {
        let n = 16;
        let tx = TruncatedPAdic::reduce(&x, n);
        let lhs = a.act_on_padic(&b.act_on_padic(&tx).unwrap()).unwrap();
        let rhs = a.compose(&b).unwrap().act_on_padic(&tx).unwrap();
        prop_assert!(lhs.agrees_with(&rhs));
        let exact = a.act_on_rational(&b.act_on_rational(&x).unwrap()).unwrap();
        prop_assert!(lhs.agrees_with(&TruncatedPAdic::reduce(&exact, lhs.precision())));
    }

    #[test]
    fn projection_lands_in_delta(
        (_p, (g, x)) in with_prime(|p| (real_element(p), value(p)))
    ) {
        let tx = TruncatedPAdic::reduce(&x, 12);
        let r = project(&g, &tx).unwrap();
        let s = &r.point;
        prop_assert!(s.x_inf() >= 0.0 && s.x_inf() < 1.0);
        prop_assert!(s.x_p().is_integral());
        prop_assert_eq!(r.gamma.m(), g.m());
        // γ ⋆ (g, x) = (g γ⁻¹, γ·x) is the point found
        let moved = g.compose_exact(&r.gamma.inverse()).unwrap();
        prop_assert_eq!(moved.m(), 0);
        prop_assert_eq!(moved.b_exact(), s.x_inf_exact());
        prop_assert!(r.gamma.act_on_padic(&tx).unwrap().agrees_with(s.x_p()));
        // idempotence
        let again = project(&AffineReal::from_ratio(g.prime(), s.x_inf_exact().clone(), 0), s.x_p()).unwrap();
        prop_assert!(again.gamma.b().is_zero());
        prop_assert_eq!(&again.point, s);
    }

    #[test]
    fn star_invariance(
        (_p, (g, x, gamma)) in with_prime(|p| (real_element(p), value(p), element(p)))
    ) {
        let tx = TruncatedPAdic::reduce(&x, 20);
        prop_assert!(star_invariance_check(&g, &tx, &gamma).unwrap());
    }

    #[test]
    fn action_law(
        (_p, (g1, g2, x, b)) in with_prime(|p| (real_element(p), real_element(p), value(p), 0.0f64..1.0))
    ) {
        let xp = TruncatedPAdic::reduce(&x.checked_sub(&x.frac_part()).unwrap(), 20);
        let s = SolenoidPoint::from_f64(b, xp).unwrap();
        prop_assert_eq!(act(&AffineReal::identity(g1.prime()), &s).unwrap(), s.clone());
        let lhs = act(&g1, &act(&g2, &s).unwrap()).unwrap();
        let rhs = act(&g1.compose(&g2).unwrap(), &s).unwrap();
        prop_assert!(lhs.agrees_with(&rhs));
    }

    #[test]
    fn equivariance((_p, (x, gamma)) in with_prime(|p| (value(p), element(p)))) {
        let p = gamma.prime();
        let e = AffineReal::identity(p);
        let tx = TruncatedPAdic::reduce(&x, 20);
        let lhs = act_exact(&gamma, &project(&e, &tx).unwrap().point).unwrap();
        let rhs = project(&e, &gamma.act_on_padic(&tx).unwrap()).unwrap().point;
        prop_assert!(lhs.agrees_with(&rhs));
    }

    #[test]
    fn drift_is_linear(
        (p, (w1, w2, alpha)) in with_prime(|_| (1i64..20, 1i64..20, 0i64..=10))
    ) {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let atom = |b: i64, m: i64| AffineExact::new(PAdicRational::from_int(p, b), m);
        let mu1 = StepMeasure::new(p, vec![(atom(0, 2), r(w1, w1 + 1)), (atom(1, -1), r(1, w1 + 1))]).unwrap();
        let mu2 = StepMeasure::new(p, vec![(atom(1, 1), r(w2, w2 + 3)), (atom(0, -3), r(3, w2 + 3))]).unwrap();
        let a = r(alpha, 10);
        let mix = mu1.mix(&a, &mu2).unwrap();
        let expected = &a * mu1.drift_p().coeff + (BigRational::one() - &a) * mu2.drift_p().coeff;
        prop_assert_eq!(mix.drift_p().coeff, expected);
        prop_assert!((mix.drift_p().coeff + mix.drift_inf().coeff).is_zero());
    }

    #[test]
    fn spectrum_ignores_refinement(
        atoms in prop::collection::vec((1i64..30, 1i64..30, 1i64..5), 1..5),
        split in 0usize..5
    ) {
        let total: i64 = atoms.iter().map(|a| a.2).sum();
        let build = |refine: bool| {
            let mut out = Vec::new();
            for (i, &(n, d, w)) in atoms.iter().enumerate() {
                let a = BigRational::new(n.into(), d.into());
                let weight = BigRational::new(w.into(), total.into());
                let b = BigRational::from_integer(i.into());
                if refine && i == split % atoms.len() {
                    let half = &weight / BigRational::from_integer(2.into());
                    out.push(RationalAtom { b: b.clone(), a: a.clone(), weight: half.clone() });
                    out.push(RationalAtom { b, a, weight: half });
                } else {
                    out.push(RationalAtom { b, a, weight });
                }
            }
            RationalStepMeasure::new(out).unwrap().boundary_spectrum()
        };
        prop_assert_eq!(build(false), build(true));
    }

    #[test]
    fn walk_exchange_identity((p, (seed, n)) in with_prime(|_| (any::<u64>(), 0usize..80))) {
        let mu = StepMeasure::mu_star(p);
        let w = run_walk(&mu, n, seed).unwrap();
        prop_assert_eq!(w.last().b(), &exact_partial_sum(&mu, seed, n).unwrap());
        prop_assert_eq!(w.last().m(), w.steps.iter().map(|s| s.m()).sum::<i64>());
    }
}
