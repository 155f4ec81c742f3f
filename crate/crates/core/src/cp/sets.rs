//! Slot count and the static compatibility sets the propagation rules use.
//!
//! Everything here depends only on the instance, never on current domains,
//! so it is computed once per solve.

use crate::cp::domain::TripSet;
use crate::model::{Instance, Minutes, StationId, TripId};

/// Largest number of trips any train could run inside the horizon: the
/// longest prefix of the duration-sorted trip list that fits into
/// horizon_end - 1 minutes, capped at the trip count. A return of 0 with a
/// non-empty trip list means no trip fits the horizon at all; instance
/// validation rules that out for valid inputs.
pub fn compute_slot_count(inst: &Instance) -> usize {
    let mut durations: Vec<Minutes> = inst.trips.iter().map(|f| f.duration).collect();
    durations.sort_unstable();
    let budget = inst.horizon_end - 1;
    let mut sum = 0;
    let mut q = 0;
    for d in durations {
        sum += d;
        if sum > budget {
            break;
        }
        q += 1;
    }
    q
}

/// Whether trip `y` can directly follow trip `x` on the same train:
/// arrival plus post-processing plus the transfer leg meets y's departure.
pub fn can_follow(inst: &Instance, x: TripId, y: TripId) -> bool {
    let fx = &inst.trips[x];
    let fy = &inst.trips[y];
    fx.arrival_time
        + fx.post_proc
        + inst.network.duration(fx.arrival_station, fy.departure_station)
        <= fy.departure_time
}

/// Whether trip `y` can follow trip `x` with maintenance of type `u` at
/// station `r` in between.
pub fn can_follow_via(inst: &Instance, x: TripId, u: usize, r: StationId, y: TripId) -> bool {
    let fx = &inst.trips[x];
    let fy = &inst.trips[y];
    let w = &inst.maintenance_types[u];
    fx.arrival_time
        + fx.post_proc
        + inst.network.duration(fx.arrival_station, r)
        + w.duration
        + inst.network.duration(r, fy.departure_station)
        <= fy.departure_time
}

/// Whether train `i` can open its day with maintenance of type `u` at
/// station `r` followed by trip `y`.
pub fn can_start_via(inst: &Instance, i: usize, u: usize, r: StationId, y: TripId) -> bool {
    let z = &inst.trains[i];
    let fy = &inst.trips[y];
    let w = &inst.maintenance_types[u];
    z.earliest_time
        + inst.network.duration(z.initial_station, r)
        + w.duration
        + inst.network.duration(r, fy.departure_station)
        <= fy.departure_time
}

/// Whether train `i` can reach trip `y` directly from its initial position.
pub fn can_start_with(inst: &Instance, i: usize, y: TripId) -> bool {
    let z = &inst.trains[i];
    let fy = &inst.trips[y];
    z.earliest_time + inst.network.duration(z.initial_station, fy.departure_station)
        <= fy.departure_time
}

pub struct StaticSets {
    pub q: usize,
    /// predecessors[k]: trips that can directly precede trip k
    pub predecessors: Vec<TripSet>,
    /// successors[k]: trips that can directly follow trip k
    pub successors: Vec<TripSet>,
    /// maint_pairs[u][x]: trips y such that (x, y) works around a type-u task
    /// at some of its stations
    pub maint_pairs: Vec<Vec<TripSet>>,
    /// maint_pred[u]: projection of maint_pairs[u] onto predecessors
    pub maint_pred: Vec<TripSet>,
    /// maint_succ[u]: projection onto successors
    pub maint_succ: Vec<TripSet>,
    /// maint_pred_of[u][y]: transpose of maint_pairs[u], the trips that can
    /// precede y around a type-u task
    pub maint_pred_of: Vec<Vec<TripSet>>,
    /// first_after_maint[i][u]: trips reachable as train i's first trip after
    /// an initial type-u task at some of its stations
    pub first_after_maint: Vec<Vec<TripSet>>,
    /// first_via_station[i][u][ri]: same, split per station index of type u
    pub first_via_station: Vec<Vec<Vec<TripSet>>>,
    /// pred_via_station[u][ri][k]: predecessors x such that (x, k) works
    /// around a type-u task at that concrete station
    pub pred_via_station: Vec<Vec<Vec<TripSet>>>,
    /// succ_via_station[u][ri][x]: transpose of pred_via_station
    pub succ_via_station: Vec<Vec<Vec<TripSet>>>,
    /// trips sorted by empty-ride distance from their arrival station to a
    /// target station; used to scan distance minima in ascending order
    pub by_arrival_distance: Vec<Vec<TripId>>,
}

pub fn compute_static_sets(inst: &Instance) -> StaticSets {
    let n = inst.num_trips();
    let m = inst.num_trains();
    let p = inst.num_maint_types();
    let stations = inst.network.len();
    let q = compute_slot_count(inst);

    let mut predecessors = vec![TripSet::empty(n); n];
    let mut successors = vec![TripSet::empty(n); n];
    for (x, succ) in successors.iter_mut().enumerate() {
        for (y, pred) in predecessors.iter_mut().enumerate() {
            if can_follow(inst, x, y) {
                pred.insert(x);
                succ.insert(y);
            }
        }
    }

    let mut maint_pairs = Vec::with_capacity(p);
    let mut maint_pred = Vec::with_capacity(p);
    let mut maint_succ = Vec::with_capacity(p);
    let mut maint_pred_of = Vec::with_capacity(p);
    let mut pred_via_station = Vec::with_capacity(p);
    let mut succ_via_station = Vec::with_capacity(p);
    for u in 0..p {
        let w = &inst.maintenance_types[u];
        let mut rows = vec![TripSet::empty(n); n];
        let mut pred = TripSet::empty(n);
        let mut succ = TripSet::empty(n);
        let mut pred_of = vec![TripSet::empty(n); n];
        let mut per_station_pred = vec![vec![TripSet::empty(n); n]; w.stations.len()];
        let mut per_station_succ = vec![vec![TripSet::empty(n); n]; w.stations.len()];
        for x in 0..n {
            for y in 0..n {
                for (ri, &r) in w.stations.iter().enumerate() {
                    if can_follow_via(inst, x, u, r, y) {
                        rows[x].insert(y);
                        pred.insert(x);
                        succ.insert(y);
                        pred_of[y].insert(x);
                        per_station_pred[ri][y].insert(x);
                        per_station_succ[ri][x].insert(y);
                    }
                }
            }
        }
        maint_pairs.push(rows);
        maint_pred.push(pred);
        maint_succ.push(succ);
        maint_pred_of.push(pred_of);
        pred_via_station.push(per_station_pred);
        succ_via_station.push(per_station_succ);
    }

    let mut first_after_maint = Vec::with_capacity(m);
    let mut first_via_station = Vec::with_capacity(m);
    for i in 0..m {
        let mut per_type = Vec::with_capacity(p);
        let mut per_type_station = Vec::with_capacity(p);
        for u in 0..p {
            let w = &inst.maintenance_types[u];
            let mut set = TripSet::empty(n);
            let mut per_station = vec![TripSet::empty(n); w.stations.len()];
            for y in 0..n {
                for (ri, &r) in w.stations.iter().enumerate() {
                    if can_start_via(inst, i, u, r, y) {
                        set.insert(y);
                        per_station[ri].insert(y);
                    }
                }
            }
            per_type.push(set);
            per_type_station.push(per_station);
        }
        first_after_maint.push(per_type);
        first_via_station.push(per_type_station);
    }

    let mut by_arrival_distance = Vec::with_capacity(stations);
    for s in 0..stations {
        let mut order: Vec<TripId> = (0..n).collect();
        order.sort_by_key(|&k| {
            (inst.network.distance(inst.trips[k].arrival_station, s), k)
        });
        by_arrival_distance.push(order);
    }

    StaticSets {
        q,
        predecessors,
        successors,
        maint_pairs,
        maint_pred,
        maint_succ,
        maint_pred_of,
        first_after_maint,
        first_via_station,
        pred_via_station,
        succ_via_station,
        by_arrival_distance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MaintenanceType, Network, Train, Trip};

    fn abc_network() -> Network {
        let mut net = Network::new(vec!["A".into(), "B".into(), "C".into()]);
        let km = [[0, 100, 200], [100, 0, 150], [200, 150, 0]];
        let min = [[0, 60, 120], [60, 0, 90], [120, 90, 0]];
        for f in 0..3 {
            for t in 0..3 {
                net.set_distance(f, t, km[f][t]);
                net.set_duration(f, t, min[f][t]);
            }
        }
        net
    }

    fn trip(dep: usize, arr: usize, dep_t: i64, arr_t: i64, post: i64) -> Trip {
        Trip {
            departure_station: dep,
            arrival_station: arr,
            departure_time: dep_t,
            arrival_time: arr_t,
            distance: 100,
            duration: arr_t - dep_t,
            post_proc: post,
        }
    }

    fn instance(trips: Vec<Trip>, trains: Vec<Train>, maint: Vec<MaintenanceType>) -> Instance {
        Instance { horizon_end: 1440, network: abc_network(), trips, trains, maintenance_types: maint }
    }

    #[test]
    fn slot_count_caps_at_trip_count() {
        let inst = instance(
            vec![trip(0, 1, 0, 60, 0), trip(1, 0, 200, 260, 0), trip(0, 1, 400, 460, 0)],
            vec![],
            vec![],
        );
        assert_eq!(compute_slot_count(&inst), 3);
    }

    #[test]
    fn slot_count_respects_horizon_budget() {
        let mut inst = instance(
            vec![trip(0, 1, 0, 800, 0), trip(1, 0, 100, 900, 0)],
            vec![],
            vec![],
        );
        inst.trips[0].duration = 800;
        inst.trips[1].duration = 800;
        inst.horizon_end = 1000;
        // 800 <= 999 < 1600
        assert_eq!(compute_slot_count(&inst), 1);
    }

    #[test]
    fn predecessor_set_matches_timing() {
        // f0 arrives B at 60, post 120; transfer B->B = 0: feasible iff dep >= 180
        let inst = instance(
            vec![trip(0, 1, 0, 60, 120), trip(1, 2, 200, 290, 0), trip(1, 2, 179, 269, 0)],
            vec![],
            vec![],
        );
        let sets = compute_static_sets(&inst);
        assert!(sets.predecessors[1].contains(0));
        assert!(sets.successors[0].contains(1));
        assert!(!sets.predecessors[2].contains(0));
        assert!(!sets.successors[0].contains(2));
    }

    #[test]
    fn boundary_equality_is_feasible() {
        let inst = instance(
            vec![trip(0, 1, 0, 60, 120), trip(1, 2, 180, 270, 0)],
            vec![],
            vec![],
        );
        let sets = compute_static_sets(&inst);
        assert!(sets.predecessors[1].contains(0));
    }

    #[test]
    fn maint_pairs_quantify_over_stations() {
        // maintenance at B (duration 240): f0 arr B 60 + post 120 + 0 + 240 + dur(B, C)=90 = 510
        let maint = MaintenanceType { stations: vec![1], duration: 240, is_periodic: true, limit: 8000 };
        let inst = instance(
            vec![trip(0, 1, 0, 60, 120), trip(2, 1, 510, 600, 0), trip(2, 1, 509, 599, 0)],
            vec![],
            vec![maint],
        );
        let sets = compute_static_sets(&inst);
        assert!(sets.maint_pairs[0][0].contains(1));
        assert!(!sets.maint_pairs[0][0].contains(2));
        assert!(sets.maint_pred[0].contains(0));
        assert!(sets.maint_succ[0].contains(1));
        assert!(!sets.maint_succ[0].contains(2));
    }

    #[test]
    fn first_after_maint_uses_train_start() {
        // train at A, earliest 0; maintenance at B 240; 0 + 60 + 240 + dur(B,B)=0 -> trips from B
        // departing >= 300 qualify
        let maint = MaintenanceType { stations: vec![1], duration: 240, is_periodic: true, limit: 8000 };
        let inst = instance(
            vec![trip(1, 2, 300, 390, 0), trip(1, 2, 299, 389, 0)],
            vec![Train { initial_station: 0, earliest_time: 0, initial_km: vec![0] }],
            vec![maint],
        );
        let sets = compute_static_sets(&inst);
        assert!(sets.first_after_maint[0][0].contains(0));
        assert!(!sets.first_after_maint[0][0].contains(1));
    }

    #[test]
    fn predecessor_duality() {
        let inst = instance(
            vec![trip(0, 1, 0, 60, 120), trip(1, 2, 200, 290, 0), trip(2, 0, 500, 620, 0)],
            vec![],
            vec![],
        );
        let sets = compute_static_sets(&inst);
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(sets.predecessors[y].contains(x), sets.successors[x].contains(y));
            }
        }
    }
}
