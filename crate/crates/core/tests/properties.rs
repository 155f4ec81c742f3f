//! Cross-cutting properties on the random instance family.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rstock::cp::domain::SlotPlan;
use rstock::cp::propagate::{propagate_fixpoint_with, PropagationConfig, SweepOrder};
use rstock::cp::sets::{compute_slot_count, compute_static_sets};
use rstock::model::Instance;
use rstock::report::validate_schedule;
use rstock::search::{branch_and_bound, SearchConfig};

/// Fixes a handful of variables to random values from their current domains,
/// mimicking decisions taken somewhere down a search branch.
fn narrow_randomly(inst: &Instance, plan: &mut SlotPlan, fixes: usize, rng: &mut ChaCha8Rng) {
    let q = plan.q;
    if q == 0 {
        return;
    }
    for _ in 0..fixes {
        let i = rng.random_range(0..inst.num_trains());
        let j = rng.random_range(0..q);
        if rng.random::<bool>() {
            let dom = plan.trip_mut(i, j);
            let options: Vec<usize> = dom.trips.iter().collect();
            let pick_sentinel =
                dom.sentinel && (options.is_empty() || rng.random::<bool>());
            if pick_sentinel {
                dom.trips.clear();
            } else if !options.is_empty() {
                let keep = options[rng.random_range(0..options.len())];
                dom.sentinel = false;
                for k in options {
                    if k != keep {
                        dom.trips.remove(k);
                    }
                }
            }
        } else {
            let dom = plan.maint_mut(i, j);
            let options: Vec<usize> = dom.iter().collect();
            let pick_none = dom.none && (options.is_empty() || rng.random::<bool>());
            if pick_none {
                for u in options {
                    dom.remove(u);
                }
            } else if !options.is_empty() {
                let keep = options[rng.random_range(0..options.len())];
                dom.none = false;
                for u in options {
                    if u != keep {
                        dom.remove(u);
                    }
                }
            }
        }
    }
}

proptest! {
    // the fixpoint must not depend on the order the rule groups run in,
    // whether it starts from full domains or somewhere down a branch
    #[test]
    fn sweep_order_does_not_change_the_fixpoint(seed in 0u64..5000, fixes in 0usize..6, salt in 0u64..1000) {
        let inst = common::small_instance(seed);
        let q = compute_slot_count(&inst);
        let sets = compute_static_sets(&inst);
        let mut plan = SlotPlan::full(inst.num_trains(), inst.num_trips(), inst.num_maint_types(), q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (salt << 13));
        narrow_randomly(&inst, &mut plan, fixes, &mut rng);

        let mut forward = plan.clone();
        let mut reverse = plan;
        let f = propagate_fixpoint_with(&inst, &sets, &mut forward, PropagationConfig::default(), SweepOrder::Forward);
        let r = propagate_fixpoint_with(&inst, &sets, &mut reverse, PropagationConfig::default(), SweepOrder::Reverse);
        prop_assert_eq!(f.is_ok(), r.is_ok(), "one sweep order failed, the other did not");
        if f.is_ok() {
            prop_assert_eq!(forward, reverse, "sweep orders reached different fixpoints");
        }
    }

    // whatever the search returns must hold up under the independent
    // schedule validator: no flags, no timing or structure violations
    #[test]
    fn search_results_validate_cleanly(seed in 0u64..3000) {
        let inst = common::small_instance(seed);
        let out = branch_and_bound(&inst, SearchConfig::default());
        let sched = out.best.expect("the empty schedule is always feasible");
        let rep = validate_schedule(&inst, &sched).expect("structurally sound");
        prop_assert!(rep.flagged.is_empty());
        prop_assert!(rep.timing_violations.is_empty());
        prop_assert!(rep.structure_violations.is_empty());
        prop_assert_eq!(rep.ordering_breaches, 0);
        prop_assert_eq!(rep.raw_allocated, sched.allocated_trips);
        prop_assert_eq!(rep.corrected_allocated, sched.allocated_trips);
        prop_assert_eq!(rep.empty_km, sched.empty_km);
    }
}
