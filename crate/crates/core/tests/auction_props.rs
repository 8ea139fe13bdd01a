mod common;

use proptest::prelude::*;
use refine_core::auction::{
    allocate, objective, realized_virtual_surplus, run_mechanism, threshold_payments, welfare, AuctionInstance,
    SlotProfile,
};
use refine_core::DistributionSpec;

fn regular_dist() -> impl Strategy<Value = DistributionSpec> {
    prop_oneof![
        Just(DistributionSpec::uniform(0.0, 1.0).unwrap()),
        Just(DistributionSpec::uniform(3.0, 5.0).unwrap()),
        Just(DistributionSpec::exponential(1.0).unwrap()),
        Just(DistributionSpec::tser(1000.0, -1.0).unwrap()),
    ]
}

fn slots(max: usize) -> impl Strategy<Value = SlotProfile> {
    prop::collection::vec(0.0f64..=1.0, 1..=max).prop_map(|mut s| {
        s.sort_by(|a, b| b.total_cmp(a));
        SlotProfile::new(s).unwrap()
    })
}

/// Instance with up to `n_max` advertisers whose values are quantiles of the prior.
fn instance(n_max: usize, m_max: usize) -> impl Strategy<Value = AuctionInstance> {
    (regular_dist(), slots(m_max), prop::collection::vec((0.0f64..1.0, 0.0f64..=1.0), 1..=n_max)).prop_map(
        |(d, s, vq)| {
            let values: Vec<f64> = vq.iter().map(|&(u, _)| d.quantile(u).unwrap()).collect();
            let rel: Vec<f64> = vq.iter().map(|&(_, p)| p).collect();
            AuctionInstance::from_parts(s, &values, &rel, d).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn allocation_maximizes_objective(inst in instance(5, 5), alpha in prop::sample::select(vec![0.0, 0.25, 0.5, 0.75, 1.0])) {
        let got = objective(&inst, &allocate(&inst, alpha).unwrap(), alpha).unwrap();
        let best = common::brute_force_max(&inst, |a| objective(&inst, a, alpha).unwrap());
        prop_assert!(got >= best - 1e-12, "{} < {}", got, best);
    }

    #[test]
    fn vcg_maximizes_welfare(inst in instance(5, 5)) {
        let got = welfare(&inst, &allocate(&inst, 0.0).unwrap());
        let best = common::brute_force_max(&inst, |a| welfare(&inst, a));
        prop_assert!(got >= best - 1e-12);
    }

    #[test]
    fn myerson_maximizes_virtual_surplus(inst in instance(5, 5)) {
        let got = realized_virtual_surplus(&inst, &allocate(&inst, 1.0).unwrap()).unwrap();
        let best = common::brute_force_max(&inst, |a| realized_virtual_surplus(&inst, a).unwrap());
        prop_assert!(got >= best - 1e-12);
    }

    #[test]
    fn negative_scores_never_win(inst in instance(6, 4), alpha in 0.0f64..=1.0) {
        let scores = inst.scores(alpha).unwrap();
        let asg = allocate(&inst, alpha).unwrap();
        for (i, _) in asg.winners() {
            prop_assert!(scores[i] >= 0.0);
        }
        // slots are filled in score order
        let w = asg.winners();
        for pair in w.windows(2) {
            prop_assert!(scores[pair[0].0] >= scores[pair[1].0]);
        }
    }

    #[test]
    fn raising_a_value_never_demotes(inst in instance(5, 4), who in 0usize..5, bump in 0.0f64..1.0, alpha in prop::sample::select(vec![0.0, 0.5, 1.0])) {
        let i = who % inst.n();
        let (_, hi) = inst.dist.grid_support();
        let mut higher = inst.clone();
        let v = inst.advertisers[i].v;
        higher.advertisers[i].v = v + bump * (hi - v);
        let rank = |s: Option<usize>| s.unwrap_or(usize::MAX);
        let before = rank(allocate(&inst, alpha).unwrap().slot_of(i));
        let after = rank(allocate(&higher, alpha).unwrap().slot_of(i));
        prop_assert!(after <= before, "slot {} -> {}", before, after);
    }

    #[test]
    fn payments_are_individually_rational(inst in instance(5, 3), alpha in 0.0f64..=1.0) {
        let (asg, metrics) = run_mechanism(&inst, alpha).unwrap();
        for pay in &metrics.payments {
            let a = inst.advertisers[pay.advertiser];
            prop_assert!(pay.amount >= -1e-9);
            prop_assert!(pay.amount <= a.realized_value() + 1e-8);
            prop_assert_eq!(asg.slot_of(pay.advertiser), Some(pay.slot));
        }
    }
}

#[test]
fn single_slot_vcg_price_is_runner_up() {
    // Uniform(0, 1) priors, alpha = 0: the winner pays the second-highest realized value.
    let d = DistributionSpec::uniform(0.0, 1.0).unwrap();
    let inst = AuctionInstance::from_parts(SlotProfile::single(), &[0.9, 0.5, 0.7], &[0.5, 1.0, 0.4], d).unwrap();
    let asg = allocate(&inst, 0.0).unwrap();
    assert_eq!(asg.winners(), vec![(1, 0)]);
    let pay = threshold_payments(&inst, 0.0, &asg).unwrap();
    assert!((pay[0].amount - 0.45).abs() < 1e-8);
}

#[test]
fn narrow_truncation_still_prices() {
    let d = DistributionSpec::tser(2.0, 0.0).unwrap();
    let inst = AuctionInstance::from_parts(SlotProfile::single(), &[1.5], &[1.0], d).unwrap();
    assert!(threshold_payments(&inst, 1.0, &allocate(&inst, 1.0).unwrap()).is_ok());
}
