//! Forward simulation of a single train's day.
//!
//! This is the one place that defines how time, positions, and maintenance
//! counters evolve. Search uses it to accept full assignments, the validator
//! uses it to judge arbitrary schedules, and both therefore agree on what
//! "feasible" means.
//!
//! Counter semantics: every driven leg (empty ride or regular trip) adds its
//! km to every counter and ends with a checkpoint. A counter is live while
//! its type is periodic, or non-periodic and not yet performed. A trip is
//! flagged when a live counter is over its limit at the trip's own arrival
//! checkpoint or was over at any leg end since the previous trip. A leg of
//! zero km is not driven and has no checkpoint. Non-periodic tasks must be
//! performed in ascending limit order; breaches are counted, not flagged.

use crate::model::{Activity, Instance, Km, MaintTypeId, Minutes, StationId, TripId};

#[derive(Clone, Debug)]
pub struct CounterState {
    counters: Vec<Km>,
    performed: Vec<bool>,
    pending_breach: bool,
    ordering_breaches: usize,
    max_done_limit: Option<Km>,
}

impl CounterState {
    pub fn new(inst: &Instance, train: usize) -> Self {
        CounterState {
            counters: inst.trains[train].initial_km.clone(),
            performed: vec![false; inst.num_maint_types()],
            pending_breach: false,
            ordering_breaches: 0,
            max_done_limit: None,
        }
    }

    pub fn drive(&mut self, inst: &Instance, km: Km) {
        for (u, c) in self.counters.iter_mut().enumerate() {
            *c += km;
            let w = &inst.maintenance_types[u];
            let live = w.is_periodic || !self.performed[u];
            if live && *c > w.limit {
                self.pending_breach = true;
            }
        }
    }

    pub fn perform(&mut self, inst: &Instance, u: MaintTypeId) {
        let w = &inst.maintenance_types[u];
        if w.is_periodic {
            self.counters[u] = 0;
        } else {
            self.performed[u] = true;
            if let Some(max) = self.max_done_limit {
                if w.limit < max {
                    self.ordering_breaches += 1;
                }
            }
            if self.max_done_limit.is_none_or(|m| w.limit > m) {
                self.max_done_limit = Some(w.limit);
            }
        }
    }

    fn take_trip_flag(&mut self) -> bool {
        std::mem::take(&mut self.pending_breach)
    }

    pub fn reading(&self, u: MaintTypeId) -> Km {
        self.counters[u]
    }

    pub fn ordering_breaches(&self) -> usize {
        self.ordering_breaches
    }
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub pos: StationId,
    pub ready: Minutes,
    pub empty_km: Km,
    pub counters: CounterState,
}

pub struct TripRun {
    pub on_time: bool,
    pub flagged: bool,
}

impl SimState {
    pub fn start(inst: &Instance, train: usize) -> Self {
        let z = &inst.trains[train];
        SimState {
            pos: z.initial_station,
            ready: z.earliest_time,
            empty_km: 0,
            counters: CounterState::new(inst, train),
        }
    }

    /// Empty ride to `to`; a no-op when already there.
    pub fn travel(&mut self, inst: &Instance, to: StationId) {
        if self.pos == to {
            return;
        }
        let km = inst.network.distance(self.pos, to);
        self.ready += inst.network.duration(self.pos, to);
        if km > 0 {
            self.empty_km += km;
            self.counters.drive(inst, km);
        }
        self.pos = to;
    }

    /// Run the task at the current position. The caller picks a legal
    /// station; this only advances time and counters.
    pub fn perform_maint(&mut self, inst: &Instance, u: MaintTypeId) {
        self.ready += inst.maintenance_types[u].duration;
        self.counters.perform(inst, u);
    }

    /// Run trip `k` from its departure station (the caller must have
    /// travelled there first).
    pub fn depart_trip(&mut self, inst: &Instance, k: TripId) -> TripRun {
        let f = &inst.trips[k];
        debug_assert_eq!(self.pos, f.departure_station);
        let on_time = self.ready <= f.departure_time;
        self.counters.drive(inst, f.distance);
        let flagged = self.counters.take_trip_flag();
        self.pos = f.arrival_station;
        self.ready = f.arrival_time + f.post_proc;
        TripRun { on_time, flagged }
    }
}

/// Cheapest clean execution of a train's trip sequence: picks a station for
/// every maintenance task so that all departures are met, no trip is flagged
/// and the task order is respected, minimising total empty km with ties
/// broken towards the lexicographically smallest station vector. None when
/// no station combination is clean.
pub fn best_stations(
    inst: &Instance,
    train: usize,
    trips: &[TripId],
    maints: &[Option<MaintTypeId>],
) -> Option<(Vec<Option<StationId>>, Km)> {
    assert_eq!(trips.len(), maints.len());
    let mut search = StationSearch {
        inst,
        trips,
        maints,
        best_km: Km::MAX,
        best: None,
    };
    let state = SimState::start(inst, train);
    let mut chosen = vec![None; trips.len()];
    search.go(0, state, &mut chosen);
    let km = search.best_km;
    search.best.map(|s| (s, km))
}

struct StationSearch<'a> {
    inst: &'a Instance,
    trips: &'a [TripId],
    maints: &'a [Option<MaintTypeId>],
    best_km: Km,
    best: Option<Vec<Option<StationId>>>,
}

impl StationSearch<'_> {
    fn go(&mut self, step: usize, state: SimState, chosen: &mut Vec<Option<StationId>>) {
        if state.empty_km > self.best_km {
            return;
        }
        if step == self.trips.len() {
            // depth-first in ascending station order: the first minimum seen
            // is the lexicographically smallest, so only strict improvements
            // replace it
            if state.empty_km < self.best_km {
                self.best_km = state.empty_km;
                self.best = Some(chosen.clone());
            }
            return;
        }
        let k = self.trips[step];
        match self.maints[step] {
            None => {
                let mut next = state;
                if !self.advance(&mut next, k) {
                    return;
                }
                self.go(step + 1, next, chosen);
            }
            Some(u) => {
                let mut stations = self.inst.maintenance_types[u].stations.clone();
                stations.sort_unstable();
                for w in stations {
                    let mut next = state.clone();
                    next.travel(self.inst, w);
                    next.perform_maint(self.inst, u);
                    if next.counters.ordering_breaches() > 0 {
                        continue;
                    }
                    if !self.advance(&mut next, k) {
                        continue;
                    }
                    chosen[step] = Some(w);
                    self.go(step + 1, next, chosen);
                    chosen[step] = None;
                }
            }
        }
    }

    fn advance(&self, state: &mut SimState, k: TripId) -> bool {
        state.travel(self.inst, self.inst.trips[k].departure_station);
        if state.ready > self.inst.trips[k].departure_time {
            return false;
        }
        let run = state.depart_trip(self.inst, k);
        run.on_time && !run.flagged
    }
}

/// Expands a station-resolved trip sequence into explicit activities,
/// emitting every non-trivial empty ride. Returns the activities and their
/// empty km.
pub fn build_activities(
    inst: &Instance,
    train: usize,
    trips: &[TripId],
    maints: &[Option<MaintTypeId>],
    stations: &[Option<StationId>],
) -> (Vec<Activity>, Km) {
    let mut acts = Vec::new();
    let mut pos = inst.trains[train].initial_station;
    let mut empty_km = 0;
    let ride = |from: StationId, to: StationId, acts: &mut Vec<Activity>, empty_km: &mut Km| {
        if from != to {
            let km = inst.network.distance(from, to);
            acts.push(Activity::EmptyRide { from, to, km });
            *empty_km += km;
        }
    };
    for (step, &k) in trips.iter().enumerate() {
        if let Some(u) = maints[step] {
            let w = stations[step].expect("fixed maintenance needs a station");
            ride(pos, w, &mut acts, &mut empty_km);
            acts.push(Activity::MaintenanceTask { mtype: u, station: w });
            pos = w;
        }
        let f = &inst.trips[k];
        ride(pos, f.departure_station, &mut acts, &mut empty_km);
        acts.push(Activity::RegularTrip { trip: k });
        pos = f.arrival_station;
    }
    (acts, empty_km)
}
