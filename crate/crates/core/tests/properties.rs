use num_traits::{One, Zero};
use proptest::prelude::*;

use wmms_core::canonical::run_greedy;
use wmms_core::lp::{audit_rounding, solve_polytime};
use wmms_core::model::instance_from_rows;
use wmms_core::oracle::brute_wmms;
use wmms_core::rational::{int, q};
use wmms_core::reduce::{lift_ido_allocation, round_weights, to_ido};
use wmms_core::wmms::{estimate_wmms, exact_wmms};
use wmms_core::{gen_canonical, Allocation, CanonicalMode, Instance, Rational, DEFAULT_BUDGET};

fn instance(max_n: usize, max_m: usize) -> impl Strategy<Value = Instance> {
    (1..=max_n, 1..=max_m).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(1i64..=8, n),
            prop::collection::vec(prop::collection::vec(0i64..=12, m), n),
        )
            .prop_map(|(w, c)| {
                instance_from_rows(
                    w.into_iter().map(|k| q(k, 8)).collect(),
                    c.into_iter()
                        .map(|row| row.into_iter().map(|k| q(k, 12)).collect())
                        .collect(),
                )
            })
    })
}

fn with_owners(max_n: usize, max_m: usize) -> impl Strategy<Value = (Instance, Vec<usize>)> {
    instance(max_n, max_m).prop_flat_map(|inst| {
        let owners = prop::collection::vec(0..inst.n(), inst.m());
        (Just(inst), owners)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_matches_brute(inst in instance(3, 6)) {
        for i in 0..inst.n() {
            let (value, partition) = exact_wmms(&inst, i, DEFAULT_BUDGET).unwrap();
            prop_assert_eq!(&value, &brute_wmms(&inst, i, DEFAULT_BUDGET).unwrap());
            inst.check_partition(&partition).unwrap();
            for (j, bundle) in partition.iter().enumerate() {
                prop_assert!(inst.bundle_cost(i, bundle) * inst.weight(i) <= &value * inst.weight(j));
            }
        }
    }

    #[test]
    fn proportional_share_is_a_lower_bound(inst in instance(3, 6)) {
        for i in 0..inst.n() {
            let (value, _) = exact_wmms(&inst, i, DEFAULT_BUDGET).unwrap();
            prop_assert!(inst.proportional_share(i) <= value);
        }
    }

    #[test]
    fn wmms_ignores_item_order_and_weight_scale(inst in instance(3, 6), shift in 1usize..6, scale in 1i64..5) {
        let m = inst.m();
        let mut permuted = inst.clone();
        permuted.items.rotate_left(shift % m);
        for row in &mut permuted.costs {
            row.rotate_left(shift % m);
        }
        let mut scaled = inst.clone();
        for agent in &mut scaled.agents {
            agent.weight = &agent.weight * int(scale);
        }
        for i in 0..inst.n() {
            let (value, _) = exact_wmms(&inst, i, DEFAULT_BUDGET).unwrap();
            prop_assert_eq!(&exact_wmms(&permuted, i, DEFAULT_BUDGET).unwrap().0, &value);
            prop_assert_eq!(&exact_wmms(&scaled, i, DEFAULT_BUDGET).unwrap().0, &value);
        }
    }

    #[test]
    fn estimate_brackets_exact(inst in instance(3, 6), k in 1i64..10) {
        let eps = q(1, k * 4);
        for i in 0..inst.n() {
            let (value, _) = exact_wmms(&inst, i, DEFAULT_BUDGET).unwrap();
            let est = estimate_wmms(&inst, i, &eps, DEFAULT_BUDGET).unwrap();
            prop_assert!(est.exhaustive);
            prop_assert!(value <= est.value);
            prop_assert!(est.value <= (Rational::one() + &eps) * &value);
        }
    }

    #[test]
    fn additive_bundle_costs((inst, owners) in with_owners(3, 6)) {
        let alloc = Allocation::from_owners(owners);
        let costs = alloc.agent_costs(&inst);
        let total: Rational = costs.iter().sum();
        let direct: Rational = (0..inst.m()).map(|e| inst.cost(alloc.owner[e].unwrap(), e).clone()).sum();
        prop_assert_eq!(total, direct);
        for (i, cost) in costs.iter().enumerate() {
            prop_assert_eq!(cost, &inst.bundle_cost(i, &alloc.bundle(i)));
        }
    }

    #[test]
    fn ido_lift_never_costs_more((inst, owners) in with_owners(3, 7)) {
        let (ido, trace) = to_ido(&inst);
        prop_assert!(ido.is_ido());
        let alloc = Allocation::from_owners(owners);
        let lifted = lift_ido_allocation(&trace, &alloc).unwrap();
        prop_assert!(lifted.is_complete());
        let before = alloc.agent_costs(&ido);
        let after = lifted.agent_costs(&inst);
        for i in 0..inst.n() {
            prop_assert!(after[i] <= before[i]);
            prop_assert_eq!(lifted.bundle(i).len(), alloc.bundle(i).len());
        }
    }

    #[test]
    fn weight_rounding_bracket(inst in instance(4, 1)) {
        let (rounded, _) = round_weights(&inst);
        let top = inst.max_weight();
        for i in 0..inst.n() {
            let (w, r) = (inst.weight(i), rounded.weight(i));
            prop_assert!(w <= r && r < &(w * int(2)));
            prop_assert!(wmms_core::rational::dyadic_exponent(r, &top).is_some());
        }
    }

    #[test]
    fn greedy_within_three_times_weight(seed in 0u64..10_000, n in 1usize..6, extra in 0usize..20) {
        let (c, _) = gen_canonical(seed, n, n + extra, CanonicalMode::IndependentTiling, DEFAULT_BUDGET).unwrap();
        let costs = run_greedy(&c).unwrap().costs;
        for (i, cost) in costs.iter().enumerate() {
            prop_assert!(cost <= &(c.instance().weight(i) * int(3)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lp_vertex_and_rounding(inst in instance(3, 5)) {
        let eps = q(1, 20);
        let sol = solve_polytime(&inst, &eps, None, DEFAULT_BUDGET).unwrap();
        prop_assert!(sol.fractional.support() <= inst.n() + inst.m());
        prop_assert!(sol.fractional.column_sums().iter().all(One::is_one));
        prop_assert!(sol.allocation.is_complete());
        let audit = audit_rounding(&inst, &sol.lp, &sol.fractional, &sol.allocation);
        prop_assert!(audit.pass(), "{:?}", audit);
        for (i, cost) in sol.allocation.agent_costs(&inst).iter().enumerate() {
            prop_assert!(cost <= &(&sol.guarantee * &sol.estimates[i]));
            if sol.estimates[i].is_zero() {
                prop_assert!(cost.is_zero());
            }
        }
    }
}
