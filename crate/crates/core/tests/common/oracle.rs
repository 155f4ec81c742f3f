//! Brute-force reference for small instances. Deliberately re-derives the
//! execution semantics (clock, counters, breaches, task ordering) instead of
//! calling into the library's simulator, so the two sides can check each
//! other: a tour is clean here iff the engine accepts it.

use std::collections::{HashMap, HashSet};

use rstock::model::{Instance, Km, StationId, TripId};

/// One train's day: trips in running order, with an optional maintenance
/// task (type, station) squeezed in before each trip.
#[derive(Clone, Debug, Default)]
pub struct Tour {
    pub trips: Vec<TripId>,
    pub tasks: Vec<Option<(usize, StationId)>>,
}

/// Runs the tour and returns its empty km. None when a departure is missed,
/// a counter that is still being checked goes over its limit at the end of a
/// driven leg or trip, or non-periodic tasks run against ascending limit
/// order. Counters accumulate over every driven leg; periodic tasks reset
/// them, finished non-periodic tasks merely stop being checked.
pub fn run_clean(inst: &Instance, train: usize, tour: &Tour) -> Option<Km> {
    assert_eq!(tour.trips.len(), tour.tasks.len());
    let z = &inst.trains[train];
    let p = inst.maintenance_types.len();
    let mut pos = z.initial_station;
    let mut clock = z.earliest_time;
    let mut counters = z.initial_km.clone();
    let mut finished = vec![false; p];
    let mut top_done_limit: Option<Km> = None;
    let mut empty = 0;

    let breach = |counters: &[Km], finished: &[bool]| {
        counters.iter().enumerate().any(|(u, &c)| {
            let w = &inst.maintenance_types[u];
            (w.is_periodic || !finished[u]) && c > w.limit
        })
    };

    for (step, &k) in tour.trips.iter().enumerate() {
        if let Some((u, r)) = tour.tasks[step] {
            let w = &inst.maintenance_types[u];
            if !w.stations.contains(&r) {
                return None;
            }
            if pos != r {
                let km = inst.network.distance(pos, r);
                clock += inst.network.duration(pos, r);
                if km > 0 {
                    empty += km;
                    for c in counters.iter_mut() {
                        *c += km;
                    }
                    if breach(&counters, &finished) {
                        return None;
                    }
                }
                pos = r;
            }
            clock += w.duration;
            if w.is_periodic {
                counters[u] = 0;
            } else {
                finished[u] = true;
                if top_done_limit.is_some_and(|m| w.limit < m) {
                    return None;
                }
                if top_done_limit.is_none_or(|m| w.limit > m) {
                    top_done_limit = Some(w.limit);
                }
            }
        }
        let f = &inst.trips[k];
        if pos != f.departure_station {
            let km = inst.network.distance(pos, f.departure_station);
            clock += inst.network.duration(pos, f.departure_station);
            if km > 0 {
                empty += km;
                for c in counters.iter_mut() {
                    *c += km;
                }
                if breach(&counters, &finished) {
                    return None;
                }
            }
        }
        if clock > f.departure_time {
            return None;
        }
        for c in counters.iter_mut() {
            *c += f.distance;
        }
        if breach(&counters, &finished) {
            return None;
        }
        pos = f.arrival_station;
        clock = f.arrival_time + f.post_proc;
    }
    Some(empty)
}

fn extend(
    inst: &Instance,
    train: usize,
    q: usize,
    task_options: &[Option<(usize, StationId)>],
    tour: &mut Tour,
    used: u64,
    out: &mut Vec<(Tour, Km)>,
) {
    // a clean tour stays clean when truncated, so an unclean prefix
    // cannot be extended into anything clean
    match run_clean(inst, train, tour) {
        Some(km) => out.push((tour.clone(), km)),
        None => return,
    }
    if tour.trips.len() == q {
        return;
    }
    for k in 0..inst.trips.len() {
        if used & (1 << k) != 0 {
            continue;
        }
        for &task in task_options {
            tour.trips.push(k);
            tour.tasks.push(task);
            extend(inst, train, q, task_options, tour, used | (1 << k), out);
            tour.trips.pop();
            tour.tasks.pop();
        }
    }
}

/// Every clean tour of one train with at most q trips, including the empty
/// one, each with its empty km.
pub fn clean_tours(inst: &Instance, train: usize, q: usize) -> Vec<(Tour, Km)> {
    assert!(inst.trips.len() <= 64);
    let mut task_options: Vec<Option<(usize, StationId)>> = vec![None];
    for (u, w) in inst.maintenance_types.iter().enumerate() {
        for &r in &w.stations {
            task_options.push(Some((u, r)));
        }
    }
    let mut out = Vec::new();
    let mut tour = Tour::default();
    extend(inst, train, q, &task_options, &mut tour, 0, &mut out);
    out
}

/// Per-slot values appearing in at least one clean tour of the train. A tour
/// with t trips fills slots 0..t and leaves the rest idle, so the values it
/// supports are its trips with their task types (or no task), plus the slot
/// sentinel and "no task" on every trailing slot.
pub struct TrainSupport {
    pub trips: Vec<HashSet<TripId>>,
    pub sentinel: Vec<bool>,
    pub types: Vec<HashSet<usize>>,
    pub none: Vec<bool>,
}

pub fn supports(inst: &Instance, q: usize) -> Vec<TrainSupport> {
    (0..inst.trains.len())
        .map(|i| {
            let mut s = TrainSupport {
                trips: vec![HashSet::new(); q],
                sentinel: vec![false; q],
                types: vec![HashSet::new(); q],
                none: vec![false; q],
            };
            for (tour, _) in clean_tours(inst, i, q) {
                for j in 0..q {
                    if j < tour.trips.len() {
                        s.trips[j].insert(tour.trips[j]);
                        match tour.tasks[j] {
                            Some((u, _)) => {
                                s.types[j].insert(u);
                            }
                            None => s.none[j] = true,
                        }
                    } else {
                        s.sentinel[j] = true;
                        s.none[j] = true;
                    }
                }
            }
            s
        })
        .collect()
}

/// Fleet optimum by exhaustion: most allocated trips first, then least empty
/// km, over all ways of giving each train a clean tour with disjoint trips.
pub fn optimum(inst: &Instance, q: usize) -> (usize, Km) {
    let tables: Vec<HashMap<u64, Km>> = (0..inst.trains.len())
        .map(|i| {
            let mut t: HashMap<u64, Km> = HashMap::new();
            for (tour, km) in clean_tours(inst, i, q) {
                let mask = tour.trips.iter().fold(0u64, |m, &k| m | 1 << k);
                let e = t.entry(mask).or_insert(Km::MAX);
                if km < *e {
                    *e = km;
                }
            }
            t
        })
        .collect();

    fn go(
        tables: &[HashMap<u64, Km>],
        i: usize,
        used: u64,
        trips: usize,
        km: Km,
        best: &mut (usize, Km),
    ) {
        if i == tables.len() {
            if trips > best.0 || (trips == best.0 && km < best.1) {
                *best = (trips, km);
            }
            return;
        }
        for (&mask, &mkm) in &tables[i] {
            if mask & used != 0 {
                continue;
            }
            go(tables, i + 1, used | mask, trips + mask.count_ones() as usize, km + mkm, best);
        }
    }

    let mut best = (0, Km::MAX);
    go(&tables, 0, 0, 0, 0, &mut best);
    best
}
