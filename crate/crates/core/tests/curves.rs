mod common;

use multiunit_core::{similarity_factor, validate, Branch, EfficiencyCurve, Error};
use proptest::prelude::*;

proptest! {
    #[test]
    fn efficiency_is_bounded(c in common::curve(), frac in 0.0f64..=1.0) {
        let p = frac * c.p_max();
        let eta = c.efficiency(p).unwrap();
        let peak = c.a() * c.a() / (4.0 * c.b());
        prop_assert!(eta >= 0.0);
        prop_assert!(eta <= peak * (1.0 + 1e-12));
        prop_assert_eq!(c.efficiency(0.0).unwrap(), 0.0);
    }

    #[test]
    fn marginal_matches_central_difference(c in common::curve(), frac in 0.0f64..=1.0) {
        let h = 1e-4;
        let p = h + frac * (c.p_max() - 2.0 * h);
        let fd = (c.output(p + h).unwrap() - c.output(p - h).unwrap()) / (2.0 * h);
        prop_assert!((c.marginal_output(p).unwrap() - fd).abs() <= 1e-6);
        let slope_fd = (c.marginal_output(p + h).unwrap() - c.marginal_output(p - h).unwrap()) / (2.0 * h);
        prop_assert!((c.marginal_slope(p) - slope_fd).abs() <= 1e-6);
    }

    #[test]
    fn scaling_is_recovered(c in common::curve(), beta in 0.1f64..10.0) {
        let s = c.scaled(beta).unwrap();
        prop_assert!((s.a() - c.a() / beta).abs() <= 1e-15 * c.a());
        prop_assert!((s.p_max() - beta * c.p_max()).abs() <= 1e-12 * s.p_max());
        let found = similarity_factor(&c, &s).unwrap();
        prop_assert!((found - beta).abs() <= 1e-9 * beta);
        // same efficiency at proportional loads
        let p = 0.37 * c.p_max();
        prop_assert!((s.efficiency(beta * p).unwrap() - c.efficiency(p).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn dissimilar_curves_have_no_factor(c in common::curve(), beta in 0.2f64..5.0, bend in 1.01f64..2.0) {
        let s = c.scaled(beta).unwrap();
        let other = EfficiencyCurve::with_default_cap(s.a(), s.b() * bend).unwrap();
        prop_assert_eq!(similarity_factor(&c, &other), None);
    }

    #[test]
    fn inverse_round_trip(c in common::curve(), frac in 1e-6f64..=1.0) {
        let (_, peak) = c.peak_point();
        let v = frac * peak;
        for branch in [Branch::Rising, Branch::Falling] {
            match c.inverse_efficiency(v, branch) {
                Ok(p) => {
                    prop_assert!((c.efficiency(p).unwrap() - v).abs() <= 1e-9);
                    let (p_e, _) = c.peak_point();
                    match branch {
                        Branch::Rising => prop_assert!(p <= p_e + 1e-9),
                        Branch::Falling => prop_assert!(p >= p_e - 1e-9),
                    }
                }
                Err(Error::RootAboveCapacity { root, p_max }) => {
                    prop_assert_eq!(branch, Branch::Falling);
                    prop_assert!(root > p_max);
                }
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }

    #[test]
    fn peak_is_a_maximum(c in common::curve()) {
        let (p_e, eta_e) = c.peak_point();
        let d = 1e-3 * c.p_max();
        prop_assume!(p_e - d > 0.0 && p_e + d < c.p_max());
        prop_assert!(c.efficiency(p_e - d).unwrap() <= eta_e);
        prop_assert!(c.efficiency(p_e + d).unwrap() <= eta_e);
    }

    #[test]
    fn marginal_roots_solve_the_level(c in common::curve(), frac in 0.01f64..0.99) {
        let level = frac * c.max_marginal();
        let (lo, hi) = c.marginal_roots(level).unwrap();
        prop_assert!(lo < c.inflection() && hi > c.inflection());
        prop_assert!((c.marginal_unchecked(lo) - level).abs() <= 1e-9);
        prop_assert!((c.marginal_unchecked(hi) - level).abs() <= 1e-9);
    }

    #[test]
    fn generated_curves_validate(c in common::curve()) {
        prop_assert!(validate(c.a(), c.b(), c.p_max()).is_valid());
    }
}

#[test]
fn derived_points_of_reference_curve() {
    let c = common::unit1();
    let (p_e, eta_e) = c.peak_point();
    assert!((p_e - 80.0).abs() < 1e-12 && (eta_e - 0.88).abs() < 1e-12);
    assert!((c.inflection() - 160.0 / 3.0).abs() < 1e-12);
    assert!((c.peak_output_point() - 320.0 / 3.0).abs() < 1e-12);
    assert!((c.max_marginal() - 0.022 * 0.022 / (3.0 * 0.0001375)).abs() < 1e-12);
}
