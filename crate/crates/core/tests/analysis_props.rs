mod common;

use proptest::prelude::*;
use refine_core::analysis::experiments::{figure2_default_grid, non_iid_welfare_gap};
use refine_core::analysis::{
    all_rankings, appendix_delta, check_condition_helps, check_condition_hurts, check_rearrangement, figure2_sweep,
    loss_integral_coarseness, loss_integral_refinement, more_ordered, nonflipspread_welfare_gap, quadrature_1d,
    rearrangement_dot, s_bar, theorem_main_trial, MhrDist, Ranking, SampleStats,
};
use refine_core::auction::SlotProfile;
use refine_core::prediction::{generate_flip_spread_refinement, non_flip_spread_delta};
use refine_core::rng;
use refine_core::DistributionSpec;

fn slot_profile(n: usize) -> impl Strategy<Value = SlotProfile> {
    prop::collection::vec(0.0f64..=1.0, 0..=n).prop_map(|mut s| {
        s.sort_by(|a, b| b.total_cmp(a));
        SlotProfile::new(s).unwrap()
    })
}

fn realized(n: usize) -> impl Strategy<Value = Vec<f64>> {
    // a small value set makes ties common
    prop::collection::vec(prop_oneof![0.0f64..10.0, prop::sample::select(vec![1.0, 2.0, 3.0])], n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn more_ordered_rankings_dominate((r, s) in (1usize..=5).prop_flat_map(|n| (realized(n), slot_profile(n)))) {
        let c = check_rearrangement(&r, &s, 1e-12).unwrap();
        prop_assert!(c.passed(1e-12), "{:?}", c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn more_ordered_is_reflexive_and_tops_out_at_efficient(r in realized(5), seed in any::<u64>()) {
        let all = all_rankings(5);
        let pick = &all[(seed % 120) as usize];
        prop_assert!(more_ordered(pick, pick, &r).unwrap());
        prop_assert!(more_ordered(&Ranking::sorted_by(&r), pick, &r).unwrap());
    }
}

#[test]
fn six_advertisers_exhaustive() {
    for (r, s) in [
        (vec![6.0, 5.0, 4.0, 3.0, 2.0, 1.0], vec![1.0, 0.8, 0.5, 0.5, 0.1, 0.0]),
        (vec![0.3, 2.0, 2.0, 7.5, 0.0, 1.1], vec![0.9, 0.4]),
    ] {
        let c = check_rearrangement(&r, &SlotProfile::new(s).unwrap(), 1e-12).unwrap();
        assert_eq!(c.rankings, 720);
        assert!(c.passed(1e-12), "{c:?}");
    }
}

#[test]
fn identity_maximizes_dot_for_sorted_values() {
    let r = [9.0, 7.0, 7.0, 3.0, 1.0, 0.5];
    let s = SlotProfile::new(vec![1.0, 0.9, 0.4, 0.2]).unwrap();
    let best = rearrangement_dot(&Ranking::identity(6), &r, &s);
    for pi in all_rankings(6) {
        assert!(rearrangement_dot(&pi, &r, &s) <= best + 1e-12);
    }
}

fn mhr_priors() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::uniform(0.0, 1.0).unwrap(),
        DistributionSpec::uniform(3.0, 5.0).unwrap(),
        DistributionSpec::exponential(1.0).unwrap(),
    ]
}

#[test]
fn transformed_values_grow_apart() {
    // v1/v2 < phi_a(v1)/phi_a(v2) with both positive forces v1 > v2 under MHR
    for (k, d) in mhr_priors().iter().enumerate() {
        let mut r = rng::stream(100 + k as u64, 0);
        let mut premises = 0;
        for n in 0..100_000 {
            let alpha = (n % 11) as f64 / 10.0;
            let (v1, v2) = (d.draw(&mut r), d.draw(&mut r));
            let (p1, p2) = (d.alpha_virtual_value(v1, alpha).unwrap(), d.alpha_virtual_value(v2, alpha).unwrap());
            if p1 > 0.0 && p2 > 0.0 && v1 * p2 < p1 * v2 {
                premises += 1;
                assert!(v1 > v2, "{d:?} alpha={alpha}: v=({v1}, {v2}) phi=({p1}, {p2})");
            }
        }
        assert!(premises > 1000, "premise rarely exercised for {d:?}");
    }
}

#[test]
fn refinement_cannot_reverse_a_coarse_inefficiency() {
    // fine p1 v1 < p2 v2 and p1 phi1 >= p2 phi2 > 0 imply coarse pbar1 phi1 >= pbar2 phi2
    let alphas = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut premises = 0;
    for (k, d) in mhr_priors().iter().enumerate() {
        for t in 0..2000u64 {
            let mut r = rng::stream(7 + k as u64, t);
            let n = rng::int_inclusive(&mut r, 2, 5);
            let coarse: Vec<f64> = (0..n).map(|_| rng::uniform(&mut r, 0.05, 1.0)).collect();
            let rs = generate_flip_spread_refinement(&coarse, t, rng::int_inclusive(&mut r, 1, 4)).unwrap();
            let values: Vec<f64> = (0..n).map(|_| d.draw(&mut r)).collect();
            for q in rs.all_queries() {
                let (fine, pbar) = rs.relevances(&q, n).unwrap();
                for &alpha in &alphas {
                    let phi: Vec<f64> = values.iter().map(|&v| d.alpha_virtual_value(v, alpha).unwrap()).collect();
                    for i in 0..n {
                        for j in 0..n {
                            if i == j {
                                continue;
                            }
                            let lower_value = fine[i] * values[i] < fine[j] * values[j];
                            let ranked_higher = fine[i] * phi[i] >= fine[j] * phi[j] && fine[j] * phi[j] > 0.0;
                            if lower_value && ranked_higher {
                                premises += 1;
                                assert!(
                                    pbar[i] * phi[i] >= pbar[j] * phi[j] - 1e-12,
                                    "{d:?} alpha={alpha} q={q} ({i},{j}) v={values:?} fine={fine:?} coarse={pbar:?}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(premises > 100, "premise exercised {premises} times");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn main_trials_never_regress(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=4, k in 0usize..3) {
        let d = MhrDist::certify(mhr_priors()[k]).unwrap();
        let rep = theorem_main_trial(seed, n, m, &d).unwrap();
        prop_assert!(rep.is_consistent());
        prop_assert!(rep.passed(), "{:?}", rep);
    }
}

#[test]
fn uniform_condition_never_hurts() {
    let d = DistributionSpec::uniform(0.0, 1.0).unwrap();
    let grid: Vec<f64> = (1..=1000).map(|k| k as f64 / 1000.0).collect();
    let mut checked = 0;
    for &v in &grid {
        for &vp in grid.iter().take_while(|&&x| x <= v) {
            assert!(!check_condition_hurts(v, vp, &d, 0.5).unwrap(), "v={v} v'={vp}");
            checked += 1;
        }
    }
    assert_eq!(checked, 500_500);
}

proptest! {
    #[test]
    fn conditions_match_ratio_definitions(v in 2.0f64..1001.0, t in 0.0f64..=1.0, c in 0.05f64..0.95) {
        let d = DistributionSpec::tser(1000.0, -1.0).unwrap();
        let vp = 2.0 + t * (v - 2.0);
        let (phi, phi_p) = (d.virtual_value(v).unwrap(), d.virtual_value(vp).unwrap());
        prop_assert_eq!(check_condition_hurts(v, vp, &d, c).unwrap(), vp / v < c && c < phi_p / phi);
        prop_assert_eq!(check_condition_helps(v, vp, &d, c).unwrap(), c < (vp / v).min(phi_p / phi));
    }

    #[test]
    fn s_bar_doubles_the_virtual_value(sp in 2.0f64..700.0, h in 100.0f64..5000.0) {
        let d = DistributionSpec::tser(h, -1.0).unwrap();
        let sb = s_bar(sp, h, -1.0).unwrap();
        if sp <= h + 1.0 && sb <= h + 1.0 {
            let want = 2.0 * d.virtual_value(sp).unwrap();
            prop_assert!((d.virtual_value(sb).unwrap() - want).abs() <= 1e-9 * want.max(1.0));
        }
    }

    #[test]
    fn closed_form_and_quadrature_agree(h in 2.0f64..5000.0, b in -10.0f64..-0.01) {
        let a = appendix_delta(h, b).unwrap();
        prop_assert!((a.closed_form.delta - a.quadrature.delta).abs() < 1e-6);
    }
}

#[test]
fn quadrature_reference_integrals() {
    let first = quadrature_1d(|x| (2.0 * x * x + 1000.0).ln() / (x * x), 1.0, 1000.0, 1e-10).unwrap();
    assert!((first.value - 2.0 * 3.51487).abs() < 1e-3);
    let third = quadrature_1d(|x| (x + 1.0) / x.powi(3) + x.ln() / (x * x), 1.0, 1000.0, 1e-10).unwrap();
    assert!((third.value - 2.4911).abs() < 5e-4);
    // independent antiderivatives
    let f1 = |x: f64| {
        -(2.0 * x * x + 1000.0).ln() / x + 2.0 * (2.0f64 / 1000.0).sqrt() * (x * (2.0f64 / 1000.0).sqrt()).atan()
    };
    assert!((first.value - (f1(1000.0) - f1(1.0))).abs() < 1e-9);
    let f3 = |x: f64| -1.0 / x - 1.0 / (2.0 * x * x) - (x.ln() + 1.0) / x;
    assert!((third.value - (f3(1000.0) - f3(1.0))).abs() < 1e-9);
}

/// TSER(1000, -1) density and the antiderivative of `(v/2 - v') f(v)` in `v`.
fn tser_parts() -> (impl Fn(f64) -> f64, impl Fn(f64, f64) -> f64) {
    let k = 1000.0 / 999.0;
    let f = move |v: f64| k / ((v - 1.0) * (v - 1.0));
    let inner = move |vp: f64, v: f64| k * (0.5 * (v - 1.0).ln() - (0.5 - vp) / (v - 1.0));
    (f, inner)
}

#[test]
fn tser_loss_integrals_against_simpson() {
    let d = DistributionSpec::tser(1000.0, -1.0).unwrap();
    let (f, inner) = tser_parts();
    let sb = |vp: f64| 1.0 + (2.0 * (vp - 1.0) * (vp - 1.0) + 1000.0).sqrt();
    let refinement = common::simpson(
        |vp| {
            let (lo, hi) = (2.0 * vp, sb(vp).min(1001.0));
            if hi <= lo {
                0.0
            } else {
                (inner(vp, hi) - inner(vp, lo)) * f(vp)
            }
        },
        2.0,
        1001.0,
        400_000,
    );
    let coarse_active = common::simpson(
        |vp| {
            let hi = (2.0 * vp).min(sb(vp)).min(1001.0);
            if hi <= vp {
                0.0
            } else {
                -(inner(vp, hi) - inner(vp, vp)) * f(vp)
            }
        },
        2.0,
        1001.0,
        400_000,
    );
    let r = loss_integral_refinement(&d, 0.5).unwrap();
    let c = loss_integral_coarseness(&d, 0.5).unwrap();
    assert!((r.value - refinement).abs() < 1e-6, "{} vs {}", r.value, refinement);
    assert!((c.active.value - coarse_active).abs() < 1e-6, "{} vs {}", c.active.value, coarse_active);
    assert!(r.error_estimate >= 0.0 && c.active.error_estimate >= 0.0);
    // the pair-level net change is the two losses netted, up to the cap at the top of the support
    let delta = appendix_delta(1000.0, -1.0).unwrap().closed_form.delta;
    assert!((r.value - c.active.value - delta).abs() < 1e-4);
}

#[test]
fn uniform_coarseness_against_monte_carlo() {
    let d = DistributionSpec::uniform(0.0, 1.0).unwrap();
    let c = loss_integral_coarseness(&d, 0.5).unwrap();
    assert!((c.as_written.value + 7.0 / 24.0).abs() < 1e-9);
    assert!(c.active.value > 0.0);
    // E[(v' - v/2) 1{v' <= v <= min(2v', 2v' - 1/2)}] for independent uniforms;
    // phi(v) < 2 phi(v') is 2v - 1 < 4v' - 2
    let mut r = rng::stream(12, 0);
    let samples: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let (v, vp) = (rng::unit(&mut r), rng::unit(&mut r));
            let active = vp >= 0.5 && v >= vp && v <= 2.0 * vp && 2.0 * v - 1.0 < 4.0 * vp - 2.0;
            if active {
                vp - v / 2.0
            } else {
                0.0
            }
        })
        .collect();
    let s = SampleStats::of(&samples);
    assert!((c.active.value - s.mean).abs() <= 3.0 * s.se, "{} vs {} ± {}", c.active.value, s.mean, s.se);
}

#[test]
fn nonflip_gap_matches_quadrature() {
    let eps = 0.01;
    let g = nonflipspread_welfare_gap(eps, 200_000, 3).unwrap();
    // chain (0.8) loses the slot on SF when 0.4 (2 v2 - 5) > 0.8 (2 v1 - 5), i.e. v2 > 2 v1 - 2.5
    let inner = |v1: f64| {
        let lo = 2.0 * v1 - 2.5;
        (0.8 * v1 * (5.0 - lo) - 0.2 * (25.0 - lo * lo)) / 2.0
    };
    // both values have density 1/2 on [3, 5]
    let loss = common::simpson(inner, 3.0, 3.75, 10_000) / 2.0;
    let expected_gap = (0.25 - non_flip_spread_delta(eps)) * loss;
    let observed = g.welfare_coarse - g.welfare_fine;
    assert!((observed - expected_gap).abs() <= 3.0 * g.se_diff, "{observed} vs {expected_gap} ± {}", g.se_diff);
    assert!(g.fine_worse_by(3.0));
}

#[test]
fn non_iid_scenario_lowers_welfare() {
    let g = non_iid_welfare_gap(0.01, 100_000, 8).unwrap();
    assert!(g.fine_worse_by(3.0), "{g:?}");
}

#[test]
fn efficiency_sweep_zero_endpoints_and_nonnegative() {
    let rows = figure2_sweep(&figure2_default_grid(), 20_000, 77).unwrap();
    for r in &rows {
        assert!(r.loss >= 0.0);
    }
    assert_eq!(rows[0].loss, 0.0);
    assert_eq!(rows.last().unwrap().loss, 0.0);
}
