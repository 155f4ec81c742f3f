//! Depth-first branch and bound over the slot plan.
//!
//! Objective: maximize bigM * allocated trips - empty km, so trip count
//! strictly dominates as long as bigM exceeds any possible km sum. Full
//! assignments are only accepted after an exact per-train simulation found
//! clean maintenance stations, which keeps every emitted schedule feasible
//! regardless of how weak the propagation was on the way down.

use std::time::Instant;

use crate::cp::domain::{SlotPlan, TripSet};
use crate::cp::propagate::{
    bound_objectives, propagate_fixpoint, PropagationConfig,
};
use crate::cp::sets::{compute_static_sets, StaticSets};
use crate::model::{Instance, Km, Schedule, TripId};
use crate::sim;

#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub big_m: i64,
    pub time_limit_secs: Option<f64>,
    pub node_limit: Option<u64>,
    pub stronger_maint_rule: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            big_m: 1_000_000,
            time_limit_secs: None,
            node_limit: None,
            stronger_maint_rule: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SearchStats {
    pub nodes: u64,
    pub fails: u64,
    pub solutions: u64,
    pub time_to_first_secs: Option<f64>,
    pub time_to_best_secs: Option<f64>,
    pub limit_reached: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct Improvement {
    pub at_secs: f64,
    pub objective: i64,
    pub trips: usize,
    pub empty_km: Km,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: Option<Schedule>,
    pub objective: Option<i64>,
    pub stats: SearchStats,
    pub improvements: Vec<Improvement>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarKind {
    Trip,
    Maint,
}

/// First-fail: the train with the fewest potential trips, ties broken by
/// fewer potential slots, then by index. Inside the train the lowest
/// unassigned slot comes first, its trip variable before its maintenance
/// variable.
fn select_variable(plan: &SlotPlan) -> Option<(usize, usize, VarKind)> {
    let mut best: Option<(usize, usize, usize)> = None;
    for i in 0..plan.num_trains {
        let open = (0..plan.q)
            .any(|j| !plan.trip(i, j).is_fixed() || !plan.maint(i, j).is_fixed());
        if !open {
            continue;
        }
        let mut union = TripSet::empty(plan.num_trips);
        let mut slots = 0;
        for j in 0..plan.q {
            let dom = &plan.trip(i, j).trips;
            if !dom.is_empty() {
                slots += 1;
                union.union_with(dom);
            }
        }
        let key = (union.len(), slots, i);
        if best.is_none_or(|b| key < b) {
            best = Some(key);
        }
    }
    let (_, _, i) = best?;
    for j in 0..plan.q {
        if !plan.trip(i, j).is_fixed() {
            return Some((i, j, VarKind::Trip));
        }
        if !plan.maint(i, j).is_fixed() {
            return Some((i, j, VarKind::Maint));
        }
    }
    unreachable!("train selected without an open variable")
}

/// Trip values greatest id first with the sentinel last; maintenance values
/// "none" first, then type ids ascending. Encoded as i64 with negative
/// values meaning sentinel / none.
fn order_values(plan: &SlotPlan, i: usize, j: usize, kind: VarKind) -> Vec<i64> {
    match kind {
        VarKind::Trip => {
            let dom = plan.trip(i, j);
            let mut vals: Vec<i64> = dom.trips.iter().map(|k| k as i64).collect();
            vals.sort_unstable_by(|a, b| b.cmp(a));
            if dom.sentinel {
                vals.push(plan.sentinel_value(i, j));
            }
            vals
        }
        VarKind::Maint => {
            let dom = plan.maint(i, j);
            let mut vals = Vec::new();
            if dom.none {
                vals.push(-1);
            }
            vals.extend(dom.iter().map(|u| u as i64));
            vals
        }
    }
}

fn apply_value(plan: &mut SlotPlan, i: usize, j: usize, kind: VarKind, value: i64) {
    match kind {
        VarKind::Trip => {
            let dom = plan.trip_mut(i, j);
            dom.trips.clear();
            if value >= 0 {
                dom.trips.insert(value as usize);
                dom.sentinel = false;
            } else {
                dom.sentinel = true;
            }
        }
        VarKind::Maint => {
            let dom = plan.maint_mut(i, j);
            if value < 0 {
                dom.types = 0;
                dom.none = true;
            } else {
                dom.types = 1u64 << value;
                dom.none = false;
            }
        }
    }
}

/// Station-resolved per-train tours of a fully assigned plan, or None when
/// some train has no clean station choice.
fn extract_schedule(inst: &Instance, plan: &SlotPlan) -> Option<(Schedule, usize, Km)> {
    let mut schedule = Schedule::empty(inst.num_trains());
    let mut allocated = 0;
    let mut empty_km = 0;
    for i in 0..plan.num_trains {
        let mut trips: Vec<TripId> = Vec::new();
        let mut maints = Vec::new();
        for j in 0..plan.q {
            if let Some(k) = plan.trip(i, j).fixed_trip() {
                trips.push(k);
                maints.push(plan.maint(i, j).fixed_type());
            }
        }
        if trips.is_empty() {
            continue;
        }
        let (stations, km) = sim::best_stations(inst, i, &trips, &maints)?;
        let (acts, built_km) = sim::build_activities(inst, i, &trips, &maints, &stations);
        debug_assert_eq!(km, built_km);
        allocated += trips.len();
        empty_km += km;
        schedule.per_train[i] = acts;
    }
    schedule.allocated_trips = allocated;
    schedule.empty_km = empty_km;
    Some((schedule, allocated, empty_km))
}

struct SearchCtx<'a> {
    inst: &'a Instance,
    sets: &'a StaticSets,
    cfg: SearchConfig,
    prop: PropagationConfig,
    start: Instant,
    stats: SearchStats,
    improvements: Vec<Improvement>,
    incumbent: i64,
    best: Option<Schedule>,
    stop: bool,
}

impl SearchCtx<'_> {
    fn out_of_budget(&mut self) -> bool {
        if let Some(limit) = self.cfg.node_limit {
            if self.stats.nodes >= limit {
                self.stats.limit_reached = true;
                return true;
            }
        }
        if let Some(secs) = self.cfg.time_limit_secs {
            if self.start.elapsed().as_secs_f64() >= secs {
                self.stats.limit_reached = true;
                return true;
            }
        }
        false
    }

    fn dfs(&mut self, mut plan: SlotPlan) {
        if self.stop || self.out_of_budget() {
            self.stop = true;
            return;
        }
        self.stats.nodes += 1;
        if propagate_fixpoint(self.inst, self.sets, &mut plan, self.prop).is_err() {
            self.stats.fails += 1;
            return;
        }
        let (max_trips, km_lb) = bound_objectives(self.inst, self.sets, &plan);
        if self.cfg.big_m * max_trips as i64 - km_lb <= self.incumbent {
            self.stats.fails += 1;
            return;
        }
        let Some((i, j, kind)) = select_variable(&plan) else {
            let Some((schedule, trips, empty_km)) = extract_schedule(self.inst, &plan) else {
                self.stats.fails += 1;
                return;
            };
            self.stats.solutions += 1;
            let elapsed = self.start.elapsed().as_secs_f64();
            if self.stats.time_to_first_secs.is_none() {
                self.stats.time_to_first_secs = Some(elapsed);
            }
            let objective = self.cfg.big_m * trips as i64 - empty_km;
            if objective > self.incumbent {
                self.incumbent = objective;
                self.best = Some(schedule);
                self.stats.time_to_best_secs = Some(elapsed);
                self.improvements.push(Improvement {
                    at_secs: elapsed,
                    objective,
                    trips,
                    empty_km,
                });
            }
            return;
        };
        for value in order_values(&plan, i, j, kind) {
            if self.stop {
                return;
            }
            let mut child = plan.clone();
            apply_value(&mut child, i, j, kind, value);
            self.dfs(child);
        }
    }
}

pub fn branch_and_bound(inst: &Instance, cfg: SearchConfig) -> SearchOutcome {
    let sets = compute_static_sets(inst);
    let plan = SlotPlan::full(
        inst.num_trains(),
        inst.num_trips(),
        inst.num_maint_types(),
        sets.q,
    );
    let mut ctx = SearchCtx {
        inst,
        sets: &sets,
        cfg,
        prop: PropagationConfig { stronger_maint_rule: cfg.stronger_maint_rule },
        start: Instant::now(),
        stats: SearchStats::default(),
        improvements: Vec::new(),
        incumbent: i64::MIN,
        best: None,
        stop: false,
    };
    ctx.dfs(plan);
    let objective = ctx.best.is_some().then_some(ctx.incumbent);
    SearchOutcome {
        best: ctx.best,
        objective,
        stats: ctx.stats,
        improvements: ctx.improvements,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activity, MaintenanceType, Network, Train, Trip};

    fn net() -> Network {
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

    fn trip(dep: usize, arr: usize, dep_t: i64, arr_t: i64, dist: i64) -> Trip {
        Trip {
            departure_station: dep,
            arrival_station: arr,
            departure_time: dep_t,
            arrival_time: arr_t,
            distance: dist,
            duration: arr_t - dep_t,
            post_proc: 0,
        }
    }

    /// Exhaustive reference: every split of trips into per-train ordered
    /// sequences with every maintenance placement, feasibility via the same
    /// station search the extractor uses.
    fn brute_force(inst: &Instance, q: usize) -> Option<(usize, Km)> {
        fn tours(inst: &Instance, q: usize) -> Vec<Vec<TripId>> {
            let n = inst.num_trips();
            let mut out = vec![vec![]];
            let mut frontier: Vec<Vec<TripId>> = vec![vec![]];
            for _ in 0..q {
                let mut next = Vec::new();
                for seq in &frontier {
                    for k in 0..n {
                        if seq.contains(&k) {
                            continue;
                        }
                        let mut s = seq.clone();
                        s.push(k);
                        next.push(s.clone());
                        out.push(s);
                    }
                }
                frontier = next;
            }
            out
        }
        fn maint_choices(p: usize, len: usize) -> Vec<Vec<Option<usize>>> {
            let mut out = vec![vec![]];
            for _ in 0..len {
                let mut next = Vec::new();
                for c in &out {
                    for choice in std::iter::once(None).chain((0..p).map(Some)) {
                        let mut c2 = c.clone();
                        c2.push(choice);
                        next.push(c2);
                    }
                }
                out = next;
            }
            out
        }
        let m = inst.num_trains();
        let p = inst.num_maint_types();
        let all_tours = tours(inst, q);
        // per train: feasible (trip set bitmask, empty km) options
        let mut options: Vec<Vec<(u64, Km)>> = Vec::new();
        for i in 0..m {
            let mut opts = vec![(0u64, 0)];
            for tour in &all_tours {
                if tour.is_empty() {
                    continue;
                }
                for maints in maint_choices(p, tour.len()) {
                    if let Some((_, km)) = sim::best_stations(inst, i, tour, &maints) {
                        let mask = tour.iter().fold(0u64, |acc, &k| acc | 1 << k);
                        opts.push((mask, km));
                    }
                }
            }
            options.push(opts);
        }
        let mut best: Option<(usize, Km)> = None;
        fn combine(
            options: &[Vec<(u64, Km)>],
            i: usize,
            used: u64,
            trips: usize,
            km: Km,
            best: &mut Option<(usize, Km)>,
        ) {
            if i == options.len() {
                let better = match *best {
                    None => true,
                    Some((bt, bk)) => trips > bt || (trips == bt && km < bk),
                };
                if better {
                    *best = Some((trips, km));
                }
                return;
            }
            for &(mask, okm) in &options[i] {
                if mask & used != 0 {
                    continue;
                }
                combine(options, i + 1, used | mask, trips + mask.count_ones() as usize, km + okm, best);
            }
        }
        combine(&options, 0, 0, 0, 0, &mut best);
        best
    }

    #[test]
    fn zero_trip_instance_yields_empty_schedule() {
        let inst = Instance {
            horizon_end: 1440,
            network: net(),
            trips: vec![],
            trains: vec![Train { initial_station: 0, earliest_time: 0, initial_km: vec![] }],
            maintenance_types: vec![],
        };
        let out = branch_and_bound(&inst, SearchConfig::default());
        let best = out.best.unwrap();
        assert_eq!(best.allocated_trips, 0);
        assert_eq!(best.empty_km, 0);
        assert_eq!(out.stats.nodes, 1);
    }

    #[test]
    fn matches_brute_force_on_small_instance() {
        let mt = MaintenanceType { stations: vec![1], duration: 60, is_periodic: true, limit: 8000 };
        let inst = Instance {
            horizon_end: 700,
            network: net(),
            trips: vec![
                trip(0, 1, 0, 300, 100),
                trip(1, 0, 360, 660, 100),
                trip(1, 2, 400, 690, 150),
                trip(2, 1, 30, 320, 150),
            ],
            trains: vec![
                Train { initial_station: 0, earliest_time: 0, initial_km: vec![7950] },
                Train { initial_station: 2, earliest_time: 0, initial_km: vec![100] },
            ],
            maintenance_types: vec![mt],
        };
        let sets = compute_static_sets(&inst);
        assert_eq!(sets.q, 2);
        let out = branch_and_bound(&inst, SearchConfig::default());
        let (oracle_trips, oracle_km) = brute_force(&inst, sets.q).unwrap();
        let best = out.best.expect("feasible instance");
        assert_eq!(best.allocated_trips, oracle_trips);
        assert_eq!(best.empty_km, oracle_km);
        assert_eq!(
            out.objective.unwrap(),
            1_000_000 * oracle_trips as i64 - oracle_km
        );
    }

    #[test]
    fn improvement_log_strictly_increases() {
        let inst = Instance {
            horizon_end: 1440,
            network: net(),
            trips: vec![
                trip(0, 1, 0, 60, 100),
                trip(1, 0, 200, 260, 100),
                trip(0, 1, 400, 460, 100),
                trip(1, 0, 600, 660, 100),
            ],
            trains: vec![
                Train { initial_station: 0, earliest_time: 0, initial_km: vec![] },
                Train { initial_station: 1, earliest_time: 0, initial_km: vec![] },
            ],
            maintenance_types: vec![],
        };
        let out = branch_and_bound(&inst, SearchConfig::default());
        assert!(!out.improvements.is_empty());
        for w in out.improvements.windows(2) {
            assert!(w[1].objective > w[0].objective);
        }
        let best = out.best.unwrap();
        assert_eq!(best.allocated_trips, 4);
    }

    #[test]
    fn node_limit_stops_the_search() {
        let inst = Instance {
            horizon_end: 1440,
            network: net(),
            trips: (0..8)
                .map(|t| trip(t % 2, 1 - t % 2, t as i64 * 120, t as i64 * 120 + 60, 100))
                .collect(),
            trains: (0..3)
                .map(|_| Train { initial_station: 0, earliest_time: 0, initial_km: vec![] })
                .collect(),
            maintenance_types: vec![],
        };
        let cfg = SearchConfig { node_limit: Some(5), ..SearchConfig::default() };
        let out = branch_and_bound(&inst, cfg);
        assert!(out.stats.limit_reached);
        assert!(out.stats.nodes <= 5);
    }

    #[test]
    fn schedules_only_reference_assigned_trains() {
        let inst = Instance {
            horizon_end: 1440,
            network: net(),
            trips: vec![trip(0, 1, 0, 60, 100)],
            trains: vec![
                Train { initial_station: 0, earliest_time: 0, initial_km: vec![] },
                Train { initial_station: 2, earliest_time: 1400, initial_km: vec![] },
            ],
            maintenance_types: vec![],
        };
        let out = branch_and_bound(&inst, SearchConfig::default());
        let best = out.best.unwrap();
        assert_eq!(best.allocated_trips, 1);
        assert!(best.per_train[1].is_empty());
        let trips: Vec<_> = best.per_train[0]
            .iter()
            .filter(|a| matches!(a, Activity::RegularTrip { .. }))
            .collect();
        assert_eq!(trips.len(), 1);
    }
}
