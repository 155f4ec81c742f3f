//! Core problem model: stations, trips, trains, maintenance types and schedules.
//!
//! All quantities are integral: times in minutes since the start of the planning
//! horizon, distances in kilometres. Types are plain data and immutable after
//! construction; solvers never mutate an `Instance`.

use serde::{Deserialize, Serialize};

pub type StationId = usize;
pub type TripId = usize;
pub type TrainId = usize;
pub type MaintTypeId = usize;
pub type Minutes = i64;
pub type Km = i64;

/// Station set with dense distance (km) and travel-duration (min) matrices.
///
/// Entries are optional so that a half-specified document can be loaded and
/// then rejected by validation with a precise message; solver code only runs
/// on validated instances and uses the panicking accessors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    pub stations: Vec<String>,
    distance_km: Vec<Option<Km>>,
    duration_min: Vec<Option<Minutes>>,
}

impl Network {
    pub fn new(stations: Vec<String>) -> Self {
        let l = stations.len();
        let mut n = Network {
            stations,
            distance_km: vec![None; l * l],
            duration_min: vec![None; l * l],
        };
        // diagonal defaults: staying put is free
        for b in 0..l {
            n.distance_km[b * l + b] = Some(0);
            n.duration_min[b * l + b] = Some(0);
        }
        n
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn station_index(&self, name: &str) -> Option<StationId> {
        self.stations.iter().position(|s| s == name)
    }

    pub fn set_distance(&mut self, from: StationId, to: StationId, km: Km) {
        let l = self.len();
        self.distance_km[from * l + to] = Some(km);
    }

    pub fn set_duration(&mut self, from: StationId, to: StationId, min: Minutes) {
        let l = self.len();
        self.duration_min[from * l + to] = Some(min);
    }

    pub fn distance_entry(&self, from: StationId, to: StationId) -> Option<Km> {
        self.distance_km[from * self.len() + to]
    }

    pub fn duration_entry(&self, from: StationId, to: StationId) -> Option<Minutes> {
        self.duration_min[from * self.len() + to]
    }

    /// Empty-travel distance from `from` to `to`. Panics on a matrix hole;
    /// call only with a validated instance.
    pub fn distance(&self, from: StationId, to: StationId) -> Km {
        self.distance_entry(from, to)
            .unwrap_or_else(|| panic!("missing distance entry {} -> {}", from, to))
    }

    /// Empty-travel duration from `from` to `to`. Panics on a matrix hole.
    pub fn duration(&self, from: StationId, to: StationId) -> Minutes {
        self.duration_entry(from, to)
            .unwrap_or_else(|| panic!("missing duration entry {} -> {}", from, to))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trip {
    pub departure_station: StationId,
    pub arrival_station: StationId,
    pub departure_time: Minutes,
    pub arrival_time: Minutes,
    /// km driven by the trip itself
    pub distance: Km,
    /// minutes between departure and arrival; kept explicit because it need
    /// not equal the matrix duration between the endpoints
    pub duration: Minutes,
    /// minutes the train is blocked after arrival before it can move again
    pub post_proc: Minutes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Train {
    pub initial_station: StationId,
    /// earliest minute the train may start moving
    pub earliest_time: Minutes,
    /// km reading per maintenance type, indexed like `Instance::maintenance_types`
    pub initial_km: Vec<Km>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaintenanceType {
    /// stations able to perform this maintenance
    pub stations: Vec<StationId>,
    pub duration: Minutes,
    /// periodic tasks reset their counter when performed; non-periodic tasks
    /// are one-off duties whose counter keeps accumulating
    pub is_periodic: bool,
    /// the counter must never exceed this reading (for non-periodic types:
    /// until the task has been performed)
    pub limit: Km,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    /// horizon is the half-open minute range [0, horizon_end)
    pub horizon_end: Minutes,
    pub network: Network,
    pub trips: Vec<Trip>,
    pub trains: Vec<Train>,
    pub maintenance_types: Vec<MaintenanceType>,
}

impl Instance {
    pub fn num_trips(&self) -> usize {
        self.trips.len()
    }

    pub fn num_trains(&self) -> usize {
        self.trains.len()
    }

    pub fn num_maint_types(&self) -> usize {
        self.maintenance_types.len()
    }
}

/// One element of a train's chronological activity list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Activity {
    #[serde(rename_all = "camelCase")]
    RegularTrip { trip: TripId },
    #[serde(rename_all = "camelCase")]
    MaintenanceTask { mtype: MaintTypeId, station: StationId },
    #[serde(rename_all = "camelCase")]
    EmptyRide { from: StationId, to: StationId, km: Km },
}

/// A complete plan: per-train activity lists plus headline metrics.
///
/// `empty_km` sums the km of all `EmptyRide` activities, i.e. every empty
/// movement the producer made explicit (transfers between trips and detours
/// into and out of maintenance stations).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Schedule {
    pub per_train: Vec<Vec<Activity>>,
    pub allocated_trips: usize,
    pub empty_km: Km,
}

impl Schedule {
    pub fn empty(num_trains: usize) -> Self {
        Schedule {
            per_train: vec![Vec::new(); num_trains],
            allocated_trips: 0,
            empty_km: 0,
        }
    }
}

/// Checks every structural invariant of an instance and returns one message
/// per violation; an empty result means the instance is usable by every
/// downstream component.
pub fn validate_instance(inst: &Instance) -> Vec<String> {
    let mut v = Vec::new();
    let l = inst.network.len();

    if inst.horizon_end <= 0 {
        v.push(format!("horizonEnd must be positive, got {}", inst.horizon_end));
    }

    {
        let mut seen = std::collections::HashSet::new();
        for s in &inst.network.stations {
            if !seen.insert(s.as_str()) {
                v.push(format!("duplicate station name {:?}", s));
            }
        }
    }

    for from in 0..l {
        for to in 0..l {
            match inst.network.distance_entry(from, to) {
                None => v.push(format!(
                    "missing distanceKm entry {} -> {}",
                    inst.network.stations[from], inst.network.stations[to]
                )),
                Some(d) if d < 0 => v.push(format!(
                    "negative distanceKm {} for {} -> {}",
                    d, inst.network.stations[from], inst.network.stations[to]
                )),
                Some(d) if from == to && d != 0 => v.push(format!(
                    "distanceKm {} -> {} must be 0, got {}",
                    inst.network.stations[from], inst.network.stations[to], d
                )),
                _ => {}
            }
            match inst.network.duration_entry(from, to) {
                None => v.push(format!(
                    "missing durationMin entry {} -> {}",
                    inst.network.stations[from], inst.network.stations[to]
                )),
                Some(d) if d < 0 => v.push(format!(
                    "negative durationMin {} for {} -> {}",
                    d, inst.network.stations[from], inst.network.stations[to]
                )),
                Some(d) if from == to && d != 0 => v.push(format!(
                    "durationMin {} -> {} must be 0, got {}",
                    inst.network.stations[from], inst.network.stations[to], d
                )),
                _ => {}
            }
        }
    }

    for (k, f) in inst.trips.iter().enumerate() {
        if f.departure_station >= l {
            v.push(format!("trip {} references unknown departure station", k));
        }
        if f.arrival_station >= l {
            v.push(format!("trip {} references unknown arrival station", k));
        }
        if f.departure_time < 0 || f.departure_time >= inst.horizon_end {
            v.push(format!(
                "trip {} departureTime {} outside [0, {})",
                k, f.departure_time, inst.horizon_end
            ));
        }
        if f.arrival_time < 0 || f.arrival_time >= inst.horizon_end {
            v.push(format!(
                "trip {} arrivalTime {} outside [0, {})",
                k, f.arrival_time, inst.horizon_end
            ));
        }
        if f.arrival_time <= f.departure_time {
            v.push(format!(
                "trip {} must arrive strictly after departing ({} <= {})",
                k, f.arrival_time, f.departure_time
            ));
        }
        if f.duration != f.arrival_time - f.departure_time {
            v.push(format!(
                "trip {} duration {} does not match arrival - departure = {}",
                k,
                f.duration,
                f.arrival_time - f.departure_time
            ));
        }
        if f.distance <= 0 {
            v.push(format!("trip {} distance must be positive, got {}", k, f.distance));
        }
        if f.post_proc < 0 {
            v.push(format!("trip {} postProc must be non-negative, got {}", k, f.post_proc));
        }
    }

    for (u, w) in inst.maintenance_types.iter().enumerate() {
        if w.stations.is_empty() {
            v.push(format!("maintenance type {} has no stations", u));
        }
        for &s in &w.stations {
            if s >= l {
                v.push(format!("maintenance type {} references unknown station", u));
            }
        }
        {
            let mut seen = std::collections::HashSet::new();
            for &s in &w.stations {
                if !seen.insert(s) {
                    v.push(format!("maintenance type {} lists a station twice", u));
                }
            }
        }
        if w.duration < 0 {
            v.push(format!("maintenance type {} duration must be non-negative", u));
        }
        if w.limit <= 0 {
            v.push(format!("maintenance type {} limit must be positive, got {}", u, w.limit));
        }
    }

    for (i, z) in inst.trains.iter().enumerate() {
        if z.initial_station >= l {
            v.push(format!("train {} references unknown initial station", i));
        }
        if z.earliest_time < 0 || z.earliest_time >= inst.horizon_end {
            v.push(format!(
                "train {} earliestTime {} outside [0, {})",
                i, z.earliest_time, inst.horizon_end
            ));
        }
        if z.initial_km.len() != inst.maintenance_types.len() {
            v.push(format!(
                "train {} has {} initialKm entries for {} maintenance types",
                i,
                z.initial_km.len(),
                inst.maintenance_types.len()
            ));
            continue;
        }
        for (u, (&km, w)) in z.initial_km.iter().zip(&inst.maintenance_types).enumerate() {
            if km < 0 {
                v.push(format!("train {} initialKm[{}] must be non-negative, got {}", i, u, km));
            }
            if w.is_periodic && km > w.limit {
                v.push(format!(
                    "train {} initialKm[{}] = {} exceeds periodic limit {}",
                    i, u, km, w.limit
                ));
            }
        }
    }

    v
}
