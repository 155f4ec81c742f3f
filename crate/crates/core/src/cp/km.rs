//! Lower bounds on the maintenance counters along a train's slot sequence.
//!
//! `KmState::reading(i, u, j)` is a lower bound on counter `u` of train `i`
//! after the trip in slot `j - 1`, taken over all completions of the current
//! domains in which slots `0..j` all carry real trips. Readings are therefore
//! conditional: a rule consuming `reading(i, u, j)` must either verify that a
//! trip is still possible in slot `j - 1` or treat the no-trip alternative as
//! its conclusion. Readings never overestimate, so pruning decisions based on
//! them never cut a feasible completion.

use crate::cp::domain::SlotPlan;
use crate::cp::sets::StaticSets;
use crate::model::{Instance, Km};

/// Large enough to dominate any real distance sum, small enough that
/// saturating additions cannot overflow.
pub const INF: Km = i64::MAX / 4;

pub fn sat_add(a: Km, b: Km) -> Km {
    if a >= INF || b >= INF {
        INF
    } else {
        a + b
    }
}

#[derive(Debug)]
pub struct KmState {
    num_types: usize,
    slots: usize,
    readings: Vec<Km>,
}

impl KmState {
    pub fn reading(&self, train: usize, mtype: usize, j: usize) -> Km {
        self.readings[(train * self.num_types + mtype) * self.slots + j]
    }
}

/// Cheapest way to run some trip in slot `s` of train `i`: connecting legs
/// plus, when `include_trip_km` is set, the trip's own distance. Counter
/// bounds need the trip distance; the empty-km objective bound does not.
/// Returns 0 when no trip is possible in the slot and INF when trips are in
/// the domain but none is reachable.
pub fn min_slot_cost(
    inst: &Instance,
    sets: &StaticSets,
    plan: &SlotPlan,
    i: usize,
    s: usize,
    include_trip_km: bool,
) -> Km {
    let dom = plan.trip(i, s);
    if dom.trips.is_empty() {
        return 0;
    }
    let maint = plan.maint(i, s);
    let direct = direct_min(inst, sets, plan, i, s, include_trip_km);
    let mut via = INF;
    for u in maint.iter() {
        via = via.min(via_min(inst, sets, plan, i, s, u, include_trip_km));
    }
    if maint.none {
        // maintenance before this slot is optional, either shape may be cheaper
        via.min(direct)
    } else if maint.types != 0 {
        // maintenance is forced; fall back to the direct bound when no
        // station works out, it never overestimates
        if via == INF {
            direct
        } else {
            via
        }
    } else {
        direct
    }
}

fn direct_min(
    inst: &Instance,
    sets: &StaticSets,
    plan: &SlotPlan,
    i: usize,
    s: usize,
    include_trip_km: bool,
) -> Km {
    let dom = &plan.trip(i, s).trips;
    let mut best = INF;
    if s == 0 {
        let start = inst.trains[i].initial_station;
        for k in dom.iter() {
            if !super::sets::can_start_with(inst, i, k) {
                continue;
            }
            let f = &inst.trips[k];
            let mut cost = inst.network.distance(start, f.departure_station);
            if include_trip_km {
                cost += f.distance;
            }
            best = best.min(cost);
        }
        return best;
    }
    let prev = &plan.trip(i, s - 1).trips;
    for k in dom.iter() {
        let f = &inst.trips[k];
        // trips sorted by empty-ride distance into k's departure station:
        // the first admissible predecessor realizes the minimum
        for &k2 in &sets.by_arrival_distance[f.departure_station] {
            if k2 == k || !prev.contains(k2) || !sets.predecessors[k].contains(k2) {
                continue;
            }
            let mut cost = inst
                .network
                .distance(inst.trips[k2].arrival_station, f.departure_station);
            if include_trip_km {
                cost += f.distance;
            }
            best = best.min(cost);
            break;
        }
    }
    best
}

fn via_min(
    inst: &Instance,
    sets: &StaticSets,
    plan: &SlotPlan,
    i: usize,
    s: usize,
    u: usize,
    include_trip_km: bool,
) -> Km {
    let dom = &plan.trip(i, s).trips;
    let mut best = INF;
    for (ri, &r) in inst.maintenance_types[u].stations.iter().enumerate() {
        if s == 0 {
            let start = inst.trains[i].initial_station;
            let approach = inst.network.distance(start, r);
            for k in sets.first_via_station[i][u][ri].iter() {
                if !dom.contains(k) {
                    continue;
                }
                let f = &inst.trips[k];
                let mut cost = approach + inst.network.distance(r, f.departure_station);
                if include_trip_km {
                    cost += f.distance;
                }
                best = best.min(cost);
            }
            continue;
        }
        let prev = &plan.trip(i, s - 1).trips;
        for k in dom.iter() {
            let f = &inst.trips[k];
            let allowed = &sets.pred_via_station[u][ri][k];
            for &k2 in &sets.by_arrival_distance[r] {
                if k2 == k || !prev.contains(k2) || !allowed.contains(k2) {
                    continue;
                }
                let mut cost = inst.network.distance(inst.trips[k2].arrival_station, r)
                    + inst.network.distance(r, f.departure_station);
                if include_trip_km {
                    cost += f.distance;
                }
                best = best.min(cost);
                break;
            }
        }
    }
    best
}

/// Cheapest km a train can carry into slot `s` after a type-`u` reset
/// directly before that slot: the exit leg from some admissible station plus
/// the slot's trip distance.
pub fn reset_floor(
    inst: &Instance,
    sets: &StaticSets,
    plan: &SlotPlan,
    i: usize,
    s: usize,
    u: usize,
) -> Km {
    let dom = &plan.trip(i, s).trips;
    let mut best = INF;
    for (ri, &r) in inst.maintenance_types[u].stations.iter().enumerate() {
        if s == 0 {
            for k in sets.first_via_station[i][u][ri].iter() {
                if !dom.contains(k) {
                    continue;
                }
                let f = &inst.trips[k];
                best = best.min(inst.network.distance(r, f.departure_station) + f.distance);
            }
            continue;
        }
        let prev = &plan.trip(i, s - 1).trips;
        for k in dom.iter() {
            if !sets.pred_via_station[u][ri][k].intersects_besides(prev, k) {
                continue;
            }
            let f = &inst.trips[k];
            best = best.min(inst.network.distance(r, f.departure_station) + f.distance);
        }
    }
    best
}

/// Shortest approach leg a type-`u` task in slot `j` of train `i` can use,
/// restricted to station choices that still admit a follow-up trip. The bool
/// reports whether a zero-length approach is among them, meaning the task
/// needs no driving and no counter checkpoint happens on the way in.
pub fn min_approach_leg(
    inst: &Instance,
    sets: &StaticSets,
    plan: &SlotPlan,
    i: usize,
    j: usize,
    u: usize,
) -> (Km, bool) {
    let dom = &plan.trip(i, j).trips;
    let mut best = INF;
    let mut zero_leg = false;
    for (ri, &r) in inst.maintenance_types[u].stations.iter().enumerate() {
        if j == 0 {
            if !sets.first_via_station[i][u][ri].intersects(dom) {
                continue;
            }
            let leg = inst
                .network
                .distance(inst.trains[i].initial_station, r);
            if leg == 0 {
                zero_leg = true;
            }
            best = best.min(leg);
            continue;
        }
        let prev = &plan.trip(i, j - 1).trips;
        for k2 in prev.iter() {
            if !sets.succ_via_station[u][ri][k2].intersects_besides(dom, k2) {
                continue;
            }
            let leg = inst
                .network
                .distance(inst.trips[k2].arrival_station, r);
            if leg == 0 {
                zero_leg = true;
            }
            best = best.min(leg);
        }
    }
    (best, zero_leg)
}

pub fn compute_km_state(inst: &Instance, sets: &StaticSets, plan: &SlotPlan) -> KmState {
    let m = inst.num_trains();
    let p = inst.num_maint_types();
    let q = plan.q;
    let slots = q + 1;
    let mut readings = vec![0; m * p * slots];
    for i in 0..m {
        let slot_cost: Vec<Km> = (0..q)
            .map(|s| min_slot_cost(inst, sets, plan, i, s, true))
            .collect();
        for u in 0..p {
            let base = (i * p + u) * slots;
            readings[base] = inst.trains[i].initial_km[u];
            let periodic = inst.maintenance_types[u].is_periodic;
            for j in 1..=q {
                let no_reset = sat_add(readings[base + j - 1], slot_cost[j - 1]);
                let maint = plan.maint(i, j - 1);
                readings[base + j] = if periodic && maint.contains(u) {
                    let floor = reset_floor(inst, sets, plan, i, j - 1, u);
                    if maint.fixed_type() == Some(u) {
                        if floor == INF {
                            no_reset
                        } else {
                            floor
                        }
                    } else {
                        floor.min(no_reset)
                    }
                } else {
                    no_reset
                };
            }
        }
    }
    KmState { num_types: p, slots, readings }
}
