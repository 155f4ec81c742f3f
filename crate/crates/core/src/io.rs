//! Instance documents: parsing, canonical writing, artificial generation and
//! deterministic subsetting.
//!
//! The on-disk format is JSON with a fixed top-level key order (`horizonEnd`,
//! `stations`, `distanceKm`, `durationMin`, `trips`, `trains`,
//! `maintenanceTypes`). Station references are by name; matrices are nested
//! maps with alphabetically sorted keys, so writing the same instance twice
//! yields byte-identical documents.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_instance, Instance, Km, MaintenanceType, Minutes, Network, Train, Trip,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid instance:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("refusing to write an instance with no trips")]
    EmptyTrips,
    #[error("generator config error: {0}")]
    Config(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct TripDoc {
    departure_station: String,
    arrival_station: String,
    departure_time: Minutes,
    arrival_time: Minutes,
    distance: Km,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration: Option<Minutes>,
    post_proc: Minutes,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct TrainDoc {
    initial_station: String,
    earliest_time: Minutes,
    initial_km: Vec<Km>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MaintenanceTypeDoc {
    stations: Vec<String>,
    duration: Minutes,
    is_periodic: bool,
    limit: Km,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct InstanceDoc {
    horizon_end: Minutes,
    stations: Vec<String>,
    distance_km: BTreeMap<String, BTreeMap<String, Km>>,
    duration_min: BTreeMap<String, BTreeMap<String, Minutes>>,
    trips: Vec<TripDoc>,
    trains: Vec<TrainDoc>,
    maintenance_types: Vec<MaintenanceTypeDoc>,
}

/// Parses an instance document and validates it; any violation is an error.
pub fn parse_instance(text: &str) -> Result<Instance, IoError> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    let inst = resolve(doc)?;
    let violations = validate_instance(&inst);
    if violations.is_empty() {
        Ok(inst)
    } else {
        Err(IoError::Validation(violations))
    }
}

fn resolve(doc: InstanceDoc) -> Result<Instance, IoError> {
    let mut network = Network::new(doc.stations.clone());
    let names = doc.stations.clone();
    let lookup = |name: &str| -> Result<usize, IoError> {
        names
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| IoError::Parse(format!("unknown station {:?}", name)))
    };
    // matrix holes are left unset and surface as validation messages
    for (from, row) in &doc.distance_km {
        let f = lookup(from)?;
        for (to, &km) in row {
            let t = lookup(to)?;
            network.set_distance(f, t, km);
        }
    }
    for (from, row) in &doc.duration_min {
        let f = lookup(from)?;
        for (to, &min) in row {
            let t = lookup(to)?;
            network.set_duration(f, t, min);
        }
    }

    let mut trips = Vec::with_capacity(doc.trips.len());
    for t in &doc.trips {
        trips.push(Trip {
            departure_station: lookup(&t.departure_station)?,
            arrival_station: lookup(&t.arrival_station)?,
            departure_time: t.departure_time,
            arrival_time: t.arrival_time,
            distance: t.distance,
            duration: t.duration.unwrap_or(t.arrival_time - t.departure_time),
            post_proc: t.post_proc,
        });
    }

    let mut trains = Vec::with_capacity(doc.trains.len());
    for z in &doc.trains {
        trains.push(Train {
            initial_station: lookup(&z.initial_station)?,
            earliest_time: z.earliest_time,
            initial_km: z.initial_km.clone(),
        });
    }

    let mut maintenance_types = Vec::with_capacity(doc.maintenance_types.len());
    for w in &doc.maintenance_types {
        let mut stations = Vec::with_capacity(w.stations.len());
        for s in &w.stations {
            stations.push(lookup(s)?);
        }
        maintenance_types.push(MaintenanceType {
            stations,
            duration: w.duration,
            is_periodic: w.is_periodic,
            limit: w.limit,
        });
    }

    Ok(Instance {
        horizon_end: doc.horizon_end,
        network,
        trips,
        trains,
        maintenance_types,
    })
}

/// Writes a validated instance as a canonical document. Instances without
/// trips are refused: every scheduling artifact downstream assumes at least
/// one trip, and an empty document is almost always an upstream bug.
pub fn write_instance(inst: &Instance) -> Result<String, IoError> {
    if inst.trips.is_empty() {
        return Err(IoError::EmptyTrips);
    }
    let name = |s: usize| inst.network.stations[s].clone();
    let mut distance_km = BTreeMap::new();
    let mut duration_min = BTreeMap::new();
    for from in 0..inst.network.len() {
        let mut drow = BTreeMap::new();
        let mut trow = BTreeMap::new();
        for to in 0..inst.network.len() {
            if let Some(km) = inst.network.distance_entry(from, to) {
                drow.insert(name(to), km);
            }
            if let Some(min) = inst.network.duration_entry(from, to) {
                trow.insert(name(to), min);
            }
        }
        distance_km.insert(name(from), drow);
        duration_min.insert(name(from), trow);
    }
    let doc = InstanceDoc {
        horizon_end: inst.horizon_end,
        stations: inst.network.stations.clone(),
        distance_km,
        duration_min,
        trips: inst
            .trips
            .iter()
            .map(|t| TripDoc {
                departure_station: name(t.departure_station),
                arrival_station: name(t.arrival_station),
                departure_time: t.departure_time,
                arrival_time: t.arrival_time,
                distance: t.distance,
                duration: Some(t.duration),
                post_proc: t.post_proc,
            })
            .collect(),
        trains: inst
            .trains
            .iter()
            .map(|z| TrainDoc {
                initial_station: name(z.initial_station),
                earliest_time: z.earliest_time,
                initial_km: z.initial_km.clone(),
            })
            .collect(),
        maintenance_types: inst
            .maintenance_types
            .iter()
            .map(|w| MaintenanceTypeDoc {
                stations: w.stations.iter().map(|&s| name(s)).collect(),
                duration: w.duration,
                is_periodic: w.is_periodic,
                limit: w.limit,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("instance serialization");
    text.push('\n');
    Ok(text)
}

/// Built-in city table: names plus symmetric km / minute entries.
/// Munich–Cologne matches the published 570 km / 259 min figures; the other
/// pairs are realistic round numbers for the same network.
const CITY_NAMES: [&str; 5] = ["Berlin", "Hamburg", "Munich", "Cologne", "Frankfurt"];
const CITY_KM: [[Km; 5]; 5] = [
    [0, 290, 590, 580, 550],
    [290, 0, 780, 430, 500],
    [590, 780, 0, 570, 400],
    [580, 430, 570, 0, 190],
    [550, 500, 400, 190, 0],
];
const CITY_MIN: [[Minutes; 5]; 5] = [
    [0, 110, 240, 260, 240],
    [110, 0, 340, 240, 220],
    [240, 340, 0, 259, 190],
    [260, 240, 259, 0, 80],
    [240, 220, 190, 80, 0],
];

#[derive(Debug, Clone)]
pub struct GenMaintenance {
    pub stations: Vec<String>,
    pub duration: Minutes,
    pub is_periodic: bool,
    pub limit: Km,
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub city_count: usize,
    pub trip_count: usize,
    pub train_count: usize,
    pub horizon_end: Minutes,
    pub post_proc: Minutes,
    pub earliest_time: Minutes,
    pub maintenance: Vec<GenMaintenance>,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            city_count: 5,
            trip_count: 72,
            train_count: 39,
            horizon_end: 1440,
            post_proc: 120,
            earliest_time: 0,
            maintenance: vec![
                GenMaintenance {
                    stations: vec!["Hamburg".into(), "Munich".into()],
                    duration: 120,
                    is_periodic: true,
                    limit: 8000,
                },
                GenMaintenance {
                    stations: vec!["Berlin".into()],
                    duration: 360,
                    is_periodic: true,
                    limit: 24000,
                },
            ],
            seed: 1,
        }
    }
}

/// Generates a random timetable over the built-in city network. Departure
/// times are uniform over the window that lets the trip finish inside the
/// horizon; train km readings are uniform below each maintenance limit.
pub fn generate_artificial(cfg: &GeneratorConfig) -> Result<Instance, IoError> {
    if !(2..=CITY_NAMES.len()).contains(&cfg.city_count) {
        return Err(IoError::Config(format!(
            "cityCount must be in 2..={}, got {}",
            CITY_NAMES.len(),
            cfg.city_count
        )));
    }
    if cfg.trip_count == 0 {
        return Err(IoError::Config("tripCount must be positive".into()));
    }
    if cfg.train_count == 0 {
        return Err(IoError::Config("trainCount must be positive".into()));
    }
    if cfg.horizon_end <= 0 {
        return Err(IoError::Config("horizonEnd must be positive".into()));
    }

    let l = cfg.city_count;
    let mut network = Network::new(CITY_NAMES[..l].iter().map(|s| s.to_string()).collect());
    for from in 0..l {
        for to in 0..l {
            network.set_distance(from, to, CITY_KM[from][to]);
            network.set_duration(from, to, CITY_MIN[from][to]);
        }
    }

    let mut maintenance_types = Vec::with_capacity(cfg.maintenance.len());
    for (u, m) in cfg.maintenance.iter().enumerate() {
        let mut stations = Vec::new();
        for name in &m.stations {
            let s = network
                .station_index(name)
                .ok_or_else(|| IoError::Config(format!("maintenance type {}: unknown station {:?}", u, name)))?;
            stations.push(s);
        }
        if m.limit <= 0 {
            return Err(IoError::Config(format!("maintenance type {}: limit must be positive", u)));
        }
        maintenance_types.push(MaintenanceType {
            stations,
            duration: m.duration,
            is_periodic: m.is_periodic,
            limit: m.limit,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut trips = Vec::with_capacity(cfg.trip_count);
    for _ in 0..cfg.trip_count {
        let from = rng.random_range(0..l);
        let mut to = rng.random_range(0..l - 1);
        if to >= from {
            to += 1;
        }
        let duration = network.duration(from, to);
        if duration >= cfg.horizon_end {
            return Err(IoError::Config(format!(
                "horizonEnd {} too small for the {} -> {} leg",
                cfg.horizon_end, CITY_NAMES[from], CITY_NAMES[to]
            )));
        }
        let departure_time = rng.random_range(0..cfg.horizon_end - duration);
        trips.push(Trip {
            departure_station: from,
            arrival_station: to,
            departure_time,
            arrival_time: departure_time + duration,
            distance: network.distance(from, to),
            duration,
            post_proc: cfg.post_proc,
        });
    }

    let mut trains = Vec::with_capacity(cfg.train_count);
    for _ in 0..cfg.train_count {
        let initial_station = rng.random_range(0..l);
        let initial_km = maintenance_types
            .iter()
            .map(|w| rng.random_range(0..w.limit))
            .collect();
        trains.push(Train {
            initial_station,
            earliest_time: cfg.earliest_time,
            initial_km,
        });
    }

    let inst = Instance {
        horizon_end: cfg.horizon_end,
        network,
        trips,
        trains,
        maintenance_types,
    };
    let violations = validate_instance(&inst);
    debug_assert!(violations.is_empty(), "{:?}", violations);
    Ok(inst)
}

/// Keeps ceil(fraction * n) trips and ceil(fraction * m) trains, chosen by a
/// seeded shuffle and re-sorted into original order, so a given (instance,
/// fraction, seed) always yields the same subset. fraction = 1 returns the
/// instance unchanged.
pub fn subset_instance(inst: &Instance, fraction: f64, seed: u64) -> Result<Instance, IoError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(IoError::Config(format!("fraction must be in [0, 1], got {}", fraction)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |count: usize, rng: &mut ChaCha8Rng| -> Vec<usize> {
        let keep = (fraction * count as f64).ceil() as usize;
        let mut idx: Vec<usize> = (0..count).collect();
        idx.shuffle(rng);
        idx.truncate(keep);
        idx.sort_unstable();
        idx
    };
    let trip_idx = pick(inst.trips.len(), &mut rng);
    let train_idx = pick(inst.trains.len(), &mut rng);
    Ok(Instance {
        horizon_end: inst.horizon_end,
        network: inst.network.clone(),
        trips: trip_idx.iter().map(|&k| inst.trips[k].clone()).collect(),
        trains: train_idx.iter().map(|&i| inst.trains[i].clone()).collect(),
        maintenance_types: inst.maintenance_types.clone(),
    })
}
