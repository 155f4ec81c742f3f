//! Schedule validation, metrics tables and Gantt rendering.
//!
//! The validator forward-simulates every train through its explicit activity
//! list. It never rejects a schedule outright: structural and timing problems
//! are collected as findings, maintenance breaches flag the affected trips,
//! and the corrected trip count discounts the flagged ones. Only dangling ids
//! are hard errors, since nothing sensible can be simulated past them.
//!
//! Flag attribution: a trip is flagged when a live counter is over its limit
//! at the trip's own arrival, or when any earlier empty ride since the last
//! trip pushed a counter over. Servicing clears the counter but not a breach
//! that already happened on the way in.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Activity, Instance, Km, MaintTypeId, Minutes, Schedule, TrainId, TripId};
use crate::sim::SimState;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("schedule covers {got} trains, instance has {want}")]
    TrainCount { got: usize, want: usize },
    #[error("train {train}, activity {index}: {what}")]
    UnknownId { train: TrainId, index: usize, what: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Trip { trip: TripId, flagged: bool },
    Maintenance { mtype: MaintTypeId },
    Empty,
}

/// One drawn bar of a train's lane, in timetable minutes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimedBlock {
    pub start: Minutes,
    pub end: Minutes,
    pub kind: BlockKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KmLedgerRow {
    pub train: TrainId,
    pub mtype: MaintTypeId,
    pub minute: Minutes,
    pub reading: Km,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub raw_allocated: usize,
    pub corrected_allocated: usize,
    pub empty_km: Km,
    pub used_trains: usize,
    pub flagged: Vec<(TrainId, TripId)>,
    pub timing_violations: Vec<String>,
    pub structure_violations: Vec<String>,
    pub ordering_breaches: usize,
    pub ledger: Vec<KmLedgerRow>,
    pub timeline: Vec<Vec<TimedBlock>>,
}

pub fn validate_schedule(inst: &Instance, sched: &Schedule) -> Result<ValidationReport, ReportError> {
    if sched.per_train.len() != inst.num_trains() {
        return Err(ReportError::TrainCount {
            got: sched.per_train.len(),
            want: inst.num_trains(),
        });
    }
    let stations = inst.network.len();
    let mut report = ValidationReport::default();
    for (i, acts) in sched.per_train.iter().enumerate() {
        let mut sim = SimState::start(inst, i);
        let mut blocks = Vec::new();
        let mut trips_here = 0usize;
        for (index, act) in acts.iter().enumerate() {
            let bad_id = |what: String| ReportError::UnknownId { train: i, index, what };
            match *act {
                Activity::EmptyRide { from, to, km } => {
                    if from >= stations || to >= stations {
                        return Err(bad_id(format!("station {}", from.max(to))));
                    }
                    if from != sim.pos {
                        report.structure_violations.push(format!(
                            "train {i}: empty ride starts at {from}, train is at {}",
                            sim.pos
                        ));
                        sim.pos = from;
                    }
                    let actual = inst.network.distance(from, to);
                    if km != actual {
                        report.structure_violations.push(format!(
                            "train {i}: empty ride {from}->{to} declares {km} km, network says {actual}"
                        ));
                    }
                    let start = sim.ready;
                    sim.travel(inst, to);
                    report.empty_km += km;
                    if sim.ready > start {
                        blocks.push(TimedBlock { start, end: sim.ready, kind: BlockKind::Empty });
                    }
                }
                Activity::MaintenanceTask { mtype, station } => {
                    if mtype >= inst.num_maint_types() {
                        return Err(bad_id(format!("maintenance type {mtype}")));
                    }
                    if station >= stations {
                        return Err(bad_id(format!("station {station}")));
                    }
                    if station != sim.pos {
                        report.structure_violations.push(format!(
                            "train {i}: maintenance at {station}, train is at {}",
                            sim.pos
                        ));
                        sim.pos = station;
                    }
                    if !inst.maintenance_types[mtype].stations.contains(&station) {
                        report.structure_violations.push(format!(
                            "train {i}: maintenance type {mtype} not offered at station {station}"
                        ));
                    }
                    let start = sim.ready;
                    sim.perform_maint(inst, mtype);
                    blocks.push(TimedBlock {
                        start,
                        end: sim.ready,
                        kind: BlockKind::Maintenance { mtype },
                    });
                }
                Activity::RegularTrip { trip } => {
                    if trip >= inst.num_trips() {
                        return Err(bad_id(format!("trip {trip}")));
                    }
                    let f = &inst.trips[trip];
                    if f.departure_station != sim.pos {
                        report.structure_violations.push(format!(
                            "train {i}: trip {trip} departs from {}, train is at {}",
                            f.departure_station, sim.pos
                        ));
                        sim.pos = f.departure_station;
                    }
                    let ready = sim.ready;
                    let run = sim.depart_trip(inst, trip);
                    if !run.on_time {
                        report.timing_violations.push(format!(
                            "train {i}: trip {trip} departs at {}, train ready at {ready}",
                            f.departure_time
                        ));
                    }
                    report.raw_allocated += 1;
                    trips_here += 1;
                    if run.flagged {
                        report.flagged.push((i, trip));
                    }
                    blocks.push(TimedBlock {
                        start: f.departure_time,
                        end: f.arrival_time,
                        kind: BlockKind::Trip { trip, flagged: run.flagged },
                    });
                }
            }
            for u in 0..inst.num_maint_types() {
                report.ledger.push(KmLedgerRow {
                    train: i,
                    mtype: u,
                    minute: sim.ready,
                    reading: sim.counters.reading(u),
                });
            }
        }
        if trips_here > 0 {
            report.used_trains += 1;
        }
        report.ordering_breaches += sim.counters.ordering_breaches();
        report.timeline.push(blocks);
    }
    if sched.allocated_trips != report.raw_allocated {
        report.structure_violations.push(format!(
            "schedule claims {} allocated trips, activities contain {}",
            sched.allocated_trips, report.raw_allocated
        ));
    }
    if sched.empty_km != report.empty_km {
        report.structure_violations.push(format!(
            "schedule claims {} empty km, activities sum to {}",
            sched.empty_km, report.empty_km
        ));
    }
    report.corrected_allocated = report.raw_allocated - report.flagged.len();
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct MetricsRow {
    pub method: String,
    pub raw_trips: usize,
    pub corrected_trips: usize,
    pub available_trips: usize,
    pub used_trains: usize,
    pub available_trains: usize,
    pub empty_km: Km,
    pub build_secs: f64,
    pub solve_secs: f64,
}

/// Plain text table, one row per method. The trips cell uses the
/// raw(corrected) notation, with the corrected count only when it differs.
pub fn compute_metrics(rows: &[MetricsRow]) -> String {
    let header = ["method", "trips", "trains", "empty-km", "build[s]", "solve[s]"];
    let mut cells: Vec<[String; 6]> = vec![header.map(String::from)];
    for r in rows {
        let trips = if r.corrected_trips == r.raw_trips {
            format!("{}/{}", r.raw_trips, r.available_trips)
        } else {
            format!("{}({})/{}", r.raw_trips, r.corrected_trips, r.available_trips)
        };
        cells.push([
            r.method.clone(),
            trips,
            format!("{}/{}", r.used_trains, r.available_trains),
            r.empty_km.to_string(),
            format!("{:.2}", r.build_secs),
            format!("{:.2}", r.solve_secs),
        ]);
    }
    let mut width = [0usize; 6];
    for row in &cells {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &cells {
        let mut line = String::new();
        for (w, cell) in width.iter().zip(row) {
            let _ = write!(line, "{cell:<w$}  ");
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

const LANE_H: i64 = 26;
const LANE_GAP: i64 = 8;
const MARGIN_LEFT: i64 = 72;
const MARGIN_TOP: i64 = 34;
const PLOT_W: f64 = 1200.0;

fn color(kind: BlockKind) -> &'static str {
    match kind {
        BlockKind::Trip { flagged: false, .. } => "black",
        BlockKind::Trip { flagged: true, .. } => "red",
        BlockKind::Maintenance { .. } => "blue",
        BlockKind::Empty => "green",
    }
}

/// Standalone SVG, one lane per train. Lanes are yellow (unavailable /
/// idle); trips draw black, flagged trips red, maintenance blue and empty
/// rides green, all in timetable minutes.
pub fn render_gantt(inst: &Instance, report: &ValidationReport) -> String {
    let horizon = inst.horizon_end.max(1);
    let n = inst.num_trains() as i64;
    let width = MARGIN_LEFT + PLOT_W as i64 + 20;
    let height = MARGIN_TOP + n * (LANE_H + LANE_GAP) + 10;
    let x = |t: Minutes| MARGIN_LEFT as f64 + t.clamp(0, horizon) as f64 / horizon as f64 * PLOT_W;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="monospace" font-size="11">"#
    );
    let step = if horizon > 2880 { 480 } else { 240 };
    let mut t = 0;
    while t <= horizon {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{t}</text>"#,
            x(t),
            MARGIN_TOP - 12
        );
        t += step;
    }
    for (i, blocks) in report.timeline.iter().enumerate() {
        let y = MARGIN_TOP + i as i64 * (LANE_H + LANE_GAP);
        let _ = writeln!(
            svg,
            r#"<text x="4" y="{}">train {i}</text>"#,
            y + LANE_H / 2 + 4
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{y}" width="{:.1}" height="{LANE_H}" fill="yellow"/>"#,
            MARGIN_LEFT, PLOT_W
        );
        for block in blocks {
            let x0 = x(block.start);
            let x1 = x(block.end);
            if x1 <= x0 {
                continue;
            }
            let _ = writeln!(
                svg,
                r#"<rect x="{x0:.1}" y="{y}" width="{:.1}" height="{LANE_H}" fill="{}"/>"#,
                x1 - x0,
                color(block.kind)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
