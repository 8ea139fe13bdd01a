use proptest::prelude::*;
use refine_core::dists::{MhrCertificate, RealizedValueDist};
use refine_core::DistributionSpec;

fn any_dist() -> impl Strategy<Value = DistributionSpec> {
    prop_oneof![
        (0.0f64..10.0, 0.1f64..10.0).prop_map(|(lo, w)| DistributionSpec::uniform(lo, lo + w).unwrap()),
        (0.05f64..5.0).prop_map(|r| DistributionSpec::exponential(r).unwrap()),
        (1.5f64..5000.0, -5.0f64..1.0).prop_map(|(h, b)| DistributionSpec::tser(h, b).unwrap()),
    ]
}

/// A point strictly inside the grid support, as a fraction of its width.
fn interior(d: &DistributionSpec, t: f64) -> f64 {
    let (lo, hi) = d.grid_support();
    lo + (0.001 + 0.998 * t) * (hi - lo)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn virtual_value_is_value_minus_rent(d in any_dist(), t in 0.0f64..1.0) {
        let v = interior(&d, t);
        prop_assert_eq!(d.virtual_value(v).unwrap(), v - d.inverse_hazard_rate(v).unwrap());
    }

    #[test]
    fn alpha_virtual_value_is_a_convex_combination(d in any_dist(), t in 0.0f64..1.0, alpha in 0.0f64..=1.0) {
        let v = interior(&d, t);
        let lhs = d.alpha_virtual_value(v, alpha).unwrap();
        let rhs = (1.0 - alpha) * v + alpha * d.virtual_value(v).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * v.abs().max(1.0));
    }

    #[test]
    fn rent_matches_survival_over_density(d in any_dist(), t in 0.0f64..1.0) {
        let v = interior(&d, t);
        let generic = d.survival(v).unwrap() / d.pdf(v).unwrap();
        let closed = d.inverse_hazard_rate(v).unwrap();
        prop_assert!((generic - closed).abs() <= 1e-9 * closed.abs().max(1.0), "{} vs {}", generic, closed);
    }

    #[test]
    fn pdf_is_derivative_of_cdf(d in any_dist(), t in 0.0f64..1.0) {
        let v = interior(&d, t);
        let (lo, hi) = d.grid_support();
        let h = 1e-5 * (hi - lo);
        // difference whichever tail is small so F near one does not cancel
        let numeric = if d.cdf(v).unwrap() <= 0.5 {
            (d.cdf(v + h).unwrap() - d.cdf(v - h).unwrap()) / (2.0 * h)
        } else {
            (d.survival(v - h).unwrap() - d.survival(v + h).unwrap()) / (2.0 * h)
        };
        prop_assert!((d.cdf(v).unwrap() + d.survival(v).unwrap() - 1.0).abs() <= 1e-12);
        let exact = d.pdf(v).unwrap();
        prop_assert!((numeric - exact).abs() <= 1e-6 * exact, "{} vs {}", numeric, exact);
    }

    #[test]
    fn quantile_inverts_cdf(d in any_dist(), p in 0.0f64..1.0) {
        let v = d.quantile(p).unwrap();
        prop_assert!((d.cdf(v).unwrap() - p).abs() <= 1e-9);
    }

    #[test]
    fn realized_value_transform(d in any_dist(), t in 0.0f64..1.0, p in 0.05f64..=1.0) {
        let v = interior(&d, t);
        let g = RealizedValueDist::new(d, p).unwrap();
        let r = p * v;
        let lam = g.inverse_hazard_rate(r).unwrap();
        let phi = g.virtual_value(r).unwrap();
        let lam_f = d.inverse_hazard_rate(r / p).unwrap();
        let phi_f = d.virtual_value(r / p).unwrap();
        prop_assert!((lam - p * lam_f).abs() <= 1e-8 * lam.abs().max(1.0));
        prop_assert!((phi - p * phi_f).abs() <= 1e-8 * v.max(1.0));
    }

    #[test]
    fn samples_stay_in_support_and_repeat(d in any_dist(), seed in any::<u64>()) {
        let a = d.sample(seed, 50);
        prop_assert_eq!(&a, &d.sample(seed, 50));
        let (lo, hi) = d.support();
        prop_assert!(a.iter().all(|&v| v >= lo && v <= hi));
    }

    #[test]
    fn alpha_reserve_is_the_sign_change(d in any_dist(), alpha in 0.0f64..=1.0) {
        if let Some(r) = d.alpha_reserve(alpha).unwrap() {
            let (lo, hi) = d.grid_support();
            prop_assert!(d.alpha_virtual_value(r, alpha).unwrap() >= -1e-9);
            if r > lo {
                let below = (r - 1e-6 * (hi - lo)).max(lo);
                prop_assert!(d.alpha_virtual_value(below, alpha).unwrap() < 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mhr_implies_regular_and_falling_penalty(d in any_dist()) {
        let grid = 2000;
        if d.certify_mhr(grid).unwrap() == MhrCertificate::Mhr {
            prop_assert!(d.certify_regular(grid).unwrap().is_regular());
            let pts: Vec<f64> = d.interior_grid(grid).into_iter().filter(|&v| v > 0.0).collect();
            for w in pts.windows(2) {
                let (a, b) = (d.penalty_fraction(w[0]).unwrap(), d.penalty_fraction(w[1]).unwrap());
                prop_assert!(b <= a + 1e-9, "penalty rises from {} to {} at {:?}", a, b, w);
            }
        }
    }
}

#[test]
fn equal_revenue_family_is_regular_but_not_mhr() {
    for (h, b) in [(10.0, 0.0), (1000.0, -1.0), (50.0, -3.0)] {
        let d = DistributionSpec::tser(h, b).unwrap();
        assert!(d.certify_regular(5000).unwrap().is_regular());
        assert!(!d.certify_mhr(5000).unwrap().is_mhr());
    }
}

#[test]
fn json_round_trip() {
    for d in [
        DistributionSpec::uniform(3.0, 5.0).unwrap(),
        DistributionSpec::exponential(2.0).unwrap(),
        DistributionSpec::tser(1000.0, -1.0).unwrap(),
    ] {
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<DistributionSpec>(&s).unwrap(), d);
    }
    assert!(serde_json::from_str::<DistributionSpec>(r#"{"kind":"uniform","params":{"lo":5,"hi":3}}"#).is_err());
}
