use proptest::prelude::*;

use splab_core::nonlinearity::{check_assumptions, SamplingSpec};
use splab_core::{Nonlinearity, ScalingContext};

#[test]
fn cubic_coulomb_weight_is_c_to_the_fourth() {
    for c in [1e-1, 1e-3, 0.37] {
        let ctx = ScalingContext::new(c, 3.0).unwrap();
        assert!((ctx.coulomb_weight() / c.powi(4) - 1.0).abs() < 1e-13);
        assert!((ctx.lambda * ctx.zoom - 1.0).abs() < 1e-13);
    }
}

#[test]
fn exponents_outside_the_supercritical_window_are_rejected() {
    for p in [2.0, 7.0 / 3.0, 5.0, 6.0, f64::NAN] {
        assert!(Nonlinearity::pure_power(p).is_err(), "p = {p}");
        assert!(ScalingContext::new(1e-2, p).is_err(), "p = {p}");
    }
    assert!(ScalingContext::new(0.0, 3.0).is_err());
}

#[test]
fn sum_of_admissible_powers_passes_every_check() {
    let f = Nonlinearity::power_sum(&[2.6, 3.4, 4.2]).unwrap();
    let (q, l) = f.default_exponents();
    let r = check_assumptions(&f, q, l, &SamplingSpec::default());
    assert!(r.all_passed(), "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn antiderivative_matches_f(s in -3.0f64..3.0) {
        let f = Nonlinearity::power_sum(&[2.6, 3.4, 4.2]).unwrap();
        let h = 1e-4;
        let fd = (f.eval_F(s + h).unwrap() - f.eval_F(s - h).unwrap()) / (2.0 * h);
        prop_assert!((fd - f.eval_f(s)).abs() <= 1e-6 * (1.0 + f.eval_f(s).abs()));
        let dfd = (f.eval_f(s + h) - f.eval_f(s - h)) / (2.0 * h);
        prop_assert!((dfd - f.eval_fprime(s)).abs() <= 1e-5 * (1.0 + f.eval_fprime(s).abs()));
    }

    #[test]
    fn pure_power_f1_holds_exactly_from_p_plus_one(p in 2.9f64..4.9) {
        // f(s)s = (p+1)F(s), so f(s)s ≤ qF(s) iff q ≥ p + 1.
        let f = Nonlinearity::pure_power(p).unwrap();
        let samples = SamplingSpec::default();
        prop_assert!(check_assumptions(&f, p + 1.0, 4.0, &samples).f1.passed);
        prop_assert!(!check_assumptions(&f, p + 0.6, 4.0, &samples).f1.passed);
    }

    #[test]
    fn power_difference_violates_f1_for_every_q(q in 3.34f64..5.99) {
        // s³ − s^{2.5}: near 0, F < 0 needs q ≤ 3.5; for large s the
        // quartic part needs q ≥ 4.
        let f = Nonlinearity::power_difference(3.0, 2.5).unwrap();
        prop_assert!(!check_assumptions(&f, q, 4.0, &SamplingSpec::default()).f1.passed);
    }
}
