//! Shared helpers for the integration suites: seeded random instance
//! families sized for brute-force cross-checking.
#![allow(dead_code)]

pub mod oracle;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rstock::model::{validate_instance, Instance, MaintenanceType, Network, Train, Trip};

/// Stations on a line at the given km coordinates. Distances are coordinate
/// gaps, durations are an affine function of the gap, so both matrices are
/// metric and symmetric.
fn line_network(coords: &[i64], dur_base: i64, dur_num: i64, dur_den: i64) -> Network {
    let names: Vec<String> = (0..coords.len()).map(|i| format!("S{}", i)).collect();
    let mut net = Network::new(names);
    for a in 0..coords.len() {
        for b in 0..coords.len() {
            if a == b {
                continue;
            }
            let km = (coords[a] - coords[b]).abs();
            net.set_distance(a, b, km);
            net.set_duration(a, b, dur_base + km * dur_num / dur_den);
        }
    }
    net
}

fn make_trip(net: &Network, dep: usize, arr: usize, dep_time: i64, post_proc: i64) -> Trip {
    let duration = net.duration(dep, arr);
    Trip {
        departure_station: dep,
        arrival_station: arr,
        departure_time: dep_time,
        arrival_time: dep_time + duration,
        distance: net.distance(dep, arr),
        duration,
        post_proc,
    }
}

/// Family for the propagation and optimality suites: up to 6 trips, 2 trains,
/// 2 maintenance types. Station gaps of at least 130 km put every timetabled
/// duration at 215+ minutes, so at most 3 trips fit the 700-minute horizon
/// and the slot count never exceeds 3. Counter limits sit in the range of a
/// couple of legs, making maintenance genuinely binding for some seeds.
pub fn small_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon_end = 700;

    let station_count = rng.random_range(3..=4);
    let coords: Vec<i64> = (0..station_count)
        .map(|i| 170 * i as i64 + rng.random_range(0..40))
        .collect();
    let net = line_network(&coords, 150, 1, 2);

    let type_count = rng.random_range(0..=2);
    let mut maintenance_types = Vec::new();
    for _ in 0..type_count {
        let mut limit = 350 + 50 * rng.random_range(0..=12i64);
        if let Some(prev) = maintenance_types
            .last()
            .filter(|w: &&MaintenanceType| !w.is_periodic)
            .map(|w| w.limit)
        {
            if limit == prev {
                limit += 25;
            }
        }
        let mut stations = vec![rng.random_range(0..station_count)];
        if rng.random::<bool>() {
            let extra = rng.random_range(0..station_count);
            if extra != stations[0] {
                stations.push(extra);
            }
        }
        maintenance_types.push(MaintenanceType {
            stations,
            duration: if rng.random::<bool>() { 60 } else { 120 },
            is_periodic: rng.random::<bool>(),
            limit,
        });
    }

    let trip_count = rng.random_range(1..=6);
    let mut trips = Vec::new();
    for _ in 0..trip_count {
        let dep = rng.random_range(0..station_count);
        let arr = (dep + rng.random_range(1..station_count)) % station_count;
        let post_proc = [0, 30, 60][rng.random_range(0..3)];
        let latest = horizon_end - 1 - net.duration(dep, arr);
        trips.push(make_trip(&net, dep, arr, rng.random_range(0..=latest), post_proc));
    }

    let train_count = rng.random_range(1..=2);
    let trains = (0..train_count)
        .map(|_| Train {
            initial_station: rng.random_range(0..station_count),
            earliest_time: if rng.random_range(0..3) == 0 { 120 } else { 0 },
            initial_km: maintenance_types
                .iter()
                .map(|w| rng.random_range(0..w.limit))
                .collect(),
        })
        .collect();

    let inst = Instance { horizon_end, network: net, trips, trains, maintenance_types };
    let problems = validate_instance(&inst);
    assert!(problems.is_empty(), "seed {}: {:?}", seed, problems);
    inst
}

/// Family for the quadratic-model agreement suites, sized so the variable
/// count stays at or below 24: one train, at most 3 trips, at most one
/// maintenance type with one station. Station gaps are a handful of km while
/// durations stay above 220 minutes, so the whole day's driving never comes
/// near a counter limit (no trip can be flagged) and the total empty km of
/// any selection stays below a single trip reward.
pub fn tiny_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon_end = 700;

    let coords = [0, 5, 11];
    let net = line_network(&coords, 220, 1, 1);
    let station_count = coords.len();

    let mut maintenance_types = Vec::new();
    if rng.random::<bool>() {
        maintenance_types.push(MaintenanceType {
            stations: vec![rng.random_range(0..station_count)],
            duration: 60,
            is_periodic: rng.random::<bool>(),
            limit: 2000 + 500 * rng.random_range(0..=5i64),
        });
    }

    let initial_station = rng.random_range(0..station_count);
    let earliest_time = if rng.random::<bool>() { 60 } else { 0 };
    let trains = vec![Train {
        initial_station,
        earliest_time,
        initial_km: maintenance_types.iter().map(|_| rng.random_range(0..=200)).collect(),
    }];

    // every trip departs late enough to be taken straight from the train's
    // start, so no trip exists only as filler for later slots
    let trip_count = rng.random_range(1..=3);
    let mut trips = Vec::new();
    for _ in 0..trip_count {
        let dep = rng.random_range(0..station_count);
        let arr = (dep + rng.random_range(1..station_count)) % station_count;
        let post_proc = [0, 30][rng.random_range(0..2)];
        let earliest_dep = earliest_time + net.duration(initial_station, dep);
        let latest = horizon_end - 1 - net.duration(dep, arr);
        trips.push(make_trip(&net, dep, arr, rng.random_range(earliest_dep..=latest), post_proc));
    }

    let inst = Instance { horizon_end, network: net, trips, trains, maintenance_types };
    let problems = validate_instance(&inst);
    assert!(problems.is_empty(), "seed {}: {:?}", seed, problems);
    inst
}
