//! Domain propagation rules and their fixpoint loop.
//!
//! Every rule is sound: it only removes values no feasible completion of the
//! current domains can take. None of the rules is complete, a full assignment
//! that survives propagation still gets an exact per-train feasibility check
//! before it is accepted as a solution.

use crate::cp::domain::{SlotPlan, TripSet};
use crate::cp::km::{self, KmState, INF};
use crate::cp::sets::{can_start_with, StaticSets};
use crate::model::Instance;

#[derive(Clone, Copy, Debug, Default)]
pub struct PropagationConfig {
    /// Per-predecessor maintenance support instead of the global projections.
    /// Off by default, the extra strength rarely pays for itself.
    pub stronger_maint_rule: bool,
}

/// Control signal meaning the current domains admit no solution. Not an
/// error: search treats it as a dead branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Infeasible;

type RuleResult = Result<bool, Infeasible>;

/// Internal sweep order of the fixpoint loop. Final domains must not depend
/// on it (checked by a property test), so everything but `Forward` exists
/// only for that comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepOrder {
    Forward,
    Reverse,
}

fn strip_trips(plan: &mut SlotPlan, i: usize, j: usize) -> RuleResult {
    let dom = plan.trip_mut(i, j);
    if dom.trips.is_empty() {
        return Ok(false);
    }
    if !dom.sentinel {
        return Err(Infeasible);
    }
    dom.trips.clear();
    Ok(true)
}

fn strip_sentinel(plan: &mut SlotPlan, i: usize, j: usize) -> RuleResult {
    let dom = plan.trip_mut(i, j);
    if !dom.sentinel {
        return Ok(false);
    }
    if dom.trips.is_empty() {
        return Err(Infeasible);
    }
    dom.sentinel = false;
    Ok(true)
}

fn maint_none_only(plan: &mut SlotPlan, i: usize, j: usize) -> RuleResult {
    let dom = plan.maint_mut(i, j);
    if dom.types == 0 {
        return Ok(false);
    }
    if !dom.none {
        return Err(Infeasible);
    }
    dom.types = 0;
    Ok(true)
}

fn remove_maint_type(plan: &mut SlotPlan, i: usize, j: usize, u: usize) -> RuleResult {
    let dom = plan.maint_mut(i, j);
    if !dom.contains(u) {
        return Ok(false);
    }
    dom.remove(u);
    if dom.is_wiped() {
        return Err(Infeasible);
    }
    Ok(true)
}

/// No trip in a slot means no trip in any later slot, and a slot that must
/// carry a trip forces a trip into every earlier slot.
fn rule_gap(plan: &mut SlotPlan) -> RuleResult {
    let mut changed = false;
    for i in 0..plan.num_trains {
        for j in 1..plan.q {
            if plan.trip(i, j - 1).trips.is_empty() {
                changed |= strip_trips(plan, i, j)?;
            }
        }
        for j in (1..plan.q).rev() {
            if !plan.trip(i, j).sentinel {
                changed |= strip_sentinel(plan, i, j - 1)?;
            }
        }
    }
    Ok(changed)
}

/// A trip can open train i's day only if the train reaches its departure in
/// time, directly or around one of the maintenance types still allowed in
/// slot 0.
fn rule_slot0_reach(inst: &Instance, sets: &StaticSets, plan: &mut SlotPlan) -> RuleResult {
    let mut changed = false;
    for i in 0..plan.num_trains {
        let mut drop = Vec::new();
        for k in plan.trip(i, 0).trips.iter() {
            let direct = can_start_with(inst, i, k);
            let via = plan
                .maint(i, 0)
                .iter()
                .any(|u| sets.first_after_maint[i][u].contains(k));
            if !direct && !via {
                drop.push(k);
            }
        }
        for k in drop {
            let dom = plan.trip_mut(i, 0);
            dom.trips.remove(k);
            if dom.is_wiped() {
                return Err(Infeasible);
            }
            changed = true;
        }
    }
    Ok(changed)
}

/// A trip with no admissible predecessor left in the previous slot cannot
/// sit in this slot.
fn rule_predecessors(sets: &StaticSets, plan: &mut SlotPlan) -> RuleResult {
    let mut changed = false;
    for i in 0..plan.num_trains {
        for j in 1..plan.q {
            let mut drop = Vec::new();
            {
                let prev = &plan.trip(i, j - 1).trips;
                for k in plan.trip(i, j).trips.iter() {
                    let direct = sets.predecessors[k].intersects(prev);
                    let via = plan
                        .maint(i, j)
                        .iter()
                        .any(|u| sets.maint_pred_of[u][k].intersects(prev));
                    if !direct && !via {
                        drop.push(k);
                    }
                }
            }
            for k in drop {
                let dom = plan.trip_mut(i, j);
                dom.trips.remove(k);
                if dom.is_wiped() {
                    return Err(Infeasible);
                }
                changed = true;
            }
        }
    }
    Ok(changed)
}

/// Dual direction: a slot keeps only successors of trips still possible in
/// the previous slot (its own sentinel always stays).
fn rule_successors(sets: &StaticSets, plan: &mut SlotPlan) -> RuleResult {
    let mut changed = false;
    for i in 0..plan.num_trains {
        for j in 1..plan.q {
            let mut allowed = TripSet::empty(plan.num_trips);
            for k in plan.trip(i, j - 1).trips.iter() {
                allowed.union_with(&sets.successors[k]);
                for u in plan.maint(i, j).iter() {
                    allowed.union_with(&sets.maint_pairs[u][k]);
                }
            }
            let dom = plan.trip_mut(i, j);
            if dom.trips.intersect_with(&allowed) {
                if dom.is_wiped() {
                    return Err(Infeasible);
                }
                changed = true;
            }
        }
    }
    Ok(changed)
}

/// Forward checking for the allDifferent over all trip slots plus a
/// pigeonhole test: slots already denied their sentinel each need a distinct
/// trip.
fn rule_all_different(plan: &mut SlotPlan) -> RuleResult {
    let mut changed = false;
    let slots: Vec<(usize, usize)> = (0..plan.num_trains)
        .flat_map(|i| (0..plan.q).map(move |j| (i, j)))
        .collect();
    for &(i, j) in &slots {
        let Some(k) = plan.trip(i, j).fixed_trip() else {
            continue;
        };
        for &(i2, j2) in &slots {
            if (i2, j2) == (i, j) {
                continue;
            }
            let dom = plan.trip_mut(i2, j2);
            if dom.trips.remove(k) {
                if dom.is_wiped() {
                    return Err(Infeasible);
                }
                changed = true;
            }
        }
    }
    let mut forced = 0usize;
    let mut union = TripSet::empty(plan.num_trips);
    for &(i, j) in &slots {
        let dom = plan.trip(i, j);
        if !dom.sentinel {
            forced += 1;
            union.union_with(&dom.trips);
        }
    }
    if union.len() < forced {
        return Err(Infeasible);
    }
    Ok(changed)
}

/// Ties each maintenance variable to its trip slot: no trip means no
/// maintenance, mandatory maintenance means a mandatory trip.
fn rule_linkage(plan: &mut SlotPlan) -> RuleResult {
    let mut changed = false;
    for i in 0..plan.num_trains {
        for j in 0..plan.q {
            if plan.trip(i, j).trips.is_empty() {
                changed |= maint_none_only(plan, i, j)?;
            }
            if !plan.maint(i, j).none {
                changed |= strip_sentinel(plan, i, j)?;
            }
        }
    }
    Ok(changed)
}

/// Drops maintenance types whose surrounding trip pairs have no support in
/// the adjacent slots. Slot 0 checks against the train's reachable first
/// trips instead of a preceding trip.
fn rule_maint_support(
    sets: &StaticSets,
    plan: &mut SlotPlan,
    cfg: PropagationConfig,
) -> RuleResult {
    let mut changed = false;
    for i in 0..plan.num_trains {
        for j in 0..plan.q {
            let mut drop = Vec::new();
            for u in plan.maint(i, j).iter() {
                let supported = if j == 0 {
                    sets.first_after_maint[i][u].intersects(&plan.trip(i, 0).trips)
                } else {
                    let prev = &plan.trip(i, j - 1).trips;
                    let cur = &plan.trip(i, j).trips;
                    if cfg.stronger_maint_rule {
                        prev.iter().any(|k| sets.maint_pairs[u][k].intersects(cur))
                    } else {
                        sets.maint_pred[u].intersects(prev) && sets.maint_succ[u].intersects(cur)
                    }
                };
                if !supported {
                    drop.push(u);
                }
            }
            for u in drop {
                changed |= remove_maint_type(plan, i, j, u)?;
            }
        }
    }
    Ok(changed)
}

/// Once a maintenance type is fixed in a slot, the adjacent trip domains
/// shrink to its compatible pairs; an empty pair set is a dead branch.
fn rule_fixed_maint(sets: &StaticSets, plan: &mut SlotPlan) -> RuleResult {
    let mut changed = false;
    for i in 0..plan.num_trains {
        for j in 0..plan.q {
            let Some(u) = plan.maint(i, j).fixed_type() else {
                continue;
            };
            if j == 0 {
                let dom = plan.trip_mut(i, 0);
                changed |= dom.trips.intersect_with(&sets.first_after_maint[i][u]);
                if dom.trips.is_empty() {
                    return Err(Infeasible);
                }
                continue;
            }
            {
                let dom = plan.trip_mut(i, j);
                changed |= dom.trips.intersect_with(&sets.maint_succ[u]);
                if dom.trips.is_empty() {
                    return Err(Infeasible);
                }
            }
            {
                let dom = plan.trip_mut(i, j - 1);
                changed |= dom.trips.intersect_with(&sets.maint_pred[u]);
                if dom.is_wiped() {
                    return Err(Infeasible);
                }
            }
            let prev = &plan.trip(i, j - 1).trips;
            let cur = &plan.trip(i, j).trips;
            if !prev.iter().any(|k| sets.maint_pairs[u][k].intersects(cur)) {
                return Err(Infeasible);
            }
        }
    }
    Ok(changed)
}

fn force_idle_from(plan: &mut SlotPlan, i: usize, start: usize) -> RuleResult {
    let mut changed = false;
    for j in start..plan.q {
        changed |= strip_trips(plan, i, j)?;
        changed |= maint_none_only(plan, i, j)?;
    }
    Ok(changed)
}

/// Counter-based pruning. Readings are conditional lower bounds (see the km
/// module), so every conclusion drawn here either verifies its trip guard or
/// forces the no-trip alternative.
fn rule_km(
    inst: &Instance,
    sets: &StaticSets,
    plan: &mut SlotPlan,
    kms: &KmState,
) -> RuleResult {
    let mut changed = false;
    let q = plan.q;
    for i in 0..plan.num_trains {
        for u in 0..plan.num_types {
            let w = &inst.maintenance_types[u];
            let limit = w.limit;
            if w.is_periodic {
                if kms.reading(i, u, 0) > limit {
                    let (_, zero_leg) = km::min_approach_leg(inst, sets, plan, i, 0, u);
                    let in_place_reset = plan.maint(i, 0).contains(u) && zero_leg;
                    if !in_place_reset {
                        changed |= force_idle_from(plan, i, 0)?;
                    }
                }
                for j in 1..=q {
                    if kms.reading(i, u, j) > limit && !plan.trip(i, j - 1).trips.is_empty() {
                        changed |= force_idle_from(plan, i, j - 1)?;
                    }
                }
                for j in 0..q {
                    if !plan.maint(i, j).contains(u) {
                        continue;
                    }
                    let (leg, zero_leg) = km::min_approach_leg(inst, sets, plan, i, j, u);
                    let lb = km::sat_add(kms.reading(i, u, j), leg);
                    let no_checkpoint_on_approach = j == 0 && zero_leg;
                    if lb > limit && !no_checkpoint_on_approach {
                        changed |= remove_maint_type(plan, i, j, u)?;
                    }
                }
            } else {
                if kms.reading(i, u, 0) > limit && !plan.trip(i, 0).trips.is_empty() {
                    return Err(Infeasible);
                }
                for j in 1..=q {
                    let unperformable_before =
                        (0..j).all(|l| !plan.maint(i, l).contains(u));
                    if unperformable_before
                        && kms.reading(i, u, j) > limit
                        && !plan.trip(i, j - 1).trips.is_empty()
                    {
                        changed |= force_idle_from(plan, i, j - 1)?;
                    }
                }
                for j in 0..q {
                    if !plan.maint(i, j).contains(u) {
                        continue;
                    }
                    if !(0..j).all(|l| !plan.maint(i, l).contains(u)) {
                        continue;
                    }
                    let (leg, zero_leg) = km::min_approach_leg(inst, sets, plan, i, j, u);
                    let lb = km::sat_add(kms.reading(i, u, j), leg);
                    let no_checkpoint_on_approach = j == 0 && zero_leg;
                    if lb > limit && !no_checkpoint_on_approach {
                        changed |= remove_maint_type(plan, i, j, u)?;
                    }
                }
            }
        }
        // non-periodic tasks happen in ascending limit order
        for r in 0..q {
            let Some(u) = plan.maint(i, r).fixed_type() else {
                continue;
            };
            if inst.maintenance_types[u].is_periodic {
                continue;
            }
            for v in 0..plan.num_types {
                if v == u || inst.maintenance_types[v].is_periodic {
                    continue;
                }
                if inst.maintenance_types[v].limit > inst.maintenance_types[u].limit {
                    for l in 0..=r {
                        changed |= remove_maint_type(plan, i, l, v)?;
                    }
                } else if inst.maintenance_types[v].limit < inst.maintenance_types[u].limit {
                    for l in r..q {
                        changed |= remove_maint_type(plan, i, l, v)?;
                    }
                }
            }
        }
    }
    Ok(changed)
}

fn run_trip_rules(
    inst: &Instance,
    sets: &StaticSets,
    plan: &mut SlotPlan,
) -> RuleResult {
    let mut changed = false;
    changed |= rule_gap(plan)?;
    changed |= rule_slot0_reach(inst, sets, plan)?;
    changed |= rule_predecessors(sets, plan)?;
    changed |= rule_successors(sets, plan)?;
    changed |= rule_all_different(plan)?;
    Ok(changed)
}

fn run_maint_rules(
    sets: &StaticSets,
    plan: &mut SlotPlan,
    cfg: PropagationConfig,
) -> RuleResult {
    let mut changed = false;
    changed |= rule_linkage(plan)?;
    changed |= rule_maint_support(sets, plan, cfg)?;
    changed |= rule_fixed_maint(sets, plan)?;
    Ok(changed)
}

pub fn propagate_fixpoint(
    inst: &Instance,
    sets: &StaticSets,
    plan: &mut SlotPlan,
    cfg: PropagationConfig,
) -> Result<KmState, Infeasible> {
    propagate_fixpoint_with(inst, sets, plan, cfg, SweepOrder::Forward)
}

pub fn propagate_fixpoint_with(
    inst: &Instance,
    sets: &StaticSets,
    plan: &mut SlotPlan,
    cfg: PropagationConfig,
    order: SweepOrder,
) -> Result<KmState, Infeasible> {
    if plan.q == 0 {
        return Ok(km::compute_km_state(inst, sets, plan));
    }
    loop {
        let mut changed = false;
        match order {
            SweepOrder::Forward => {
                changed |= run_trip_rules(inst, sets, plan)?;
                changed |= run_maint_rules(sets, plan, cfg)?;
            }
            SweepOrder::Reverse => {
                changed |= run_maint_rules(sets, plan, cfg)?;
                changed |= run_trip_rules(inst, sets, plan)?;
            }
        }
        let kms = km::compute_km_state(inst, sets, plan);
        changed |= rule_km(inst, sets, plan, &kms)?;
        if !changed {
            return Ok(kms);
        }
    }
}

/// Upper bound on allocatable trips and lower bound on empty km for the
/// current domains. The trip bound counts every trip still present anywhere;
/// the km bound sums the cheapest connecting legs of the slots that are
/// already denied their sentinel.
pub fn bound_objectives(
    inst: &Instance,
    sets: &StaticSets,
    plan: &SlotPlan,
) -> (usize, i64) {
    let mut union = TripSet::empty(plan.num_trips);
    for i in 0..plan.num_trains {
        for j in 0..plan.q {
            union.union_with(&plan.trip(i, j).trips);
        }
    }
    let mut empty_km = 0i64;
    for i in 0..plan.num_trains {
        for j in 0..plan.q {
            if plan.trip(i, j).sentinel {
                continue;
            }
            let cost = km::min_slot_cost(inst, sets, plan, i, j, false);
            if cost < INF {
                empty_km += cost;
            }
        }
    }
    (union.len(), empty_km)
}
