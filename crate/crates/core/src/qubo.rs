//! QUBO formulation: extended maintenance trips, variable indexing with a
//! slot-0 reachability pre-filter, penalty/reward term assembly, and a plain
//! text coordinate-list export.
//!
//! All coefficients are dyadic rationals with the fixed denominator `SCALE`,
//! stored as i64 numerators. The only non-integer inputs are the logistic
//! maintenance urgencies; each is rounded once into an atom shared by every
//! term it feeds, so squared-sum structure survives the rounding exactly and
//! energies compare deterministically across runs and platforms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::model::{Instance, Km, MaintTypeId, MaintenanceType, Minutes, StationId, TrainId, TripId};

pub const SCALE: i64 = 1 << 20;

/// Logistic midpoint offset: urgency reaches 1/2 when the counter is this
/// many km short of the limit.
pub const URGENCY_MIDPOINT_KM: Km = 1300;
/// A type is due for immediate servicing when fewer than this many km remain.
pub const IMMEDIATE_MARGIN_KM: Km = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Weights {
    pub reward: i64,
    pub penalty: i64,
    pub km: i64,
    pub maintenance: i64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { reward: 100, penalty: 1000, km: 1, maintenance: 40 }
    }
}

pub type ExtId = usize;

/// A trip variant, optionally preceded by a maintenance task. The variant
/// departs from the maintenance station at a departure time moved forward by
/// the task duration plus the transfer to the base trip's departure station.
/// Variants without maintenance are identical to their base trip.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendedTrip {
    pub base: TripId,
    pub maintenance: Option<(MaintTypeId, StationId)>,
    pub departure_station: StationId,
    pub departure_time: Minutes,
    pub arrival_station: StationId,
    pub arrival_time: Minutes,
    pub duration: Minutes,
    pub post_proc: Minutes,
    /// Empty km of the maintenance exit leg (station to base departure), 0
    /// for plain variants.
    pub maintenance_km: Km,
    pub base_km: Km,
}

pub fn build_extended_trips(inst: &Instance) -> Vec<ExtendedTrip> {
    let mut out = Vec::new();
    for (k, trip) in inst.trips.iter().enumerate() {
        out.push(ExtendedTrip {
            base: k,
            maintenance: None,
            departure_station: trip.departure_station,
            departure_time: trip.departure_time,
            arrival_station: trip.arrival_station,
            arrival_time: trip.arrival_time,
            duration: trip.duration,
            post_proc: trip.post_proc,
            maintenance_km: 0,
            base_km: trip.distance,
        });
    }
    for (k, trip) in inst.trips.iter().enumerate() {
        for (u, mt) in inst.maintenance_types.iter().enumerate() {
            for &station in &mt.stations {
                let transfer = inst.network.duration(station, trip.departure_station);
                let departure_time = trip.departure_time - mt.duration - transfer;
                if departure_time < 0 {
                    continue;
                }
                out.push(ExtendedTrip {
                    base: k,
                    maintenance: Some((u, station)),
                    departure_station: station,
                    departure_time,
                    arrival_station: trip.arrival_station,
                    arrival_time: trip.arrival_time,
                    duration: trip.arrival_time - departure_time,
                    post_proc: trip.post_proc,
                    maintenance_km: inst.network.distance(station, trip.departure_station),
                    base_km: trip.distance,
                });
            }
        }
    }
    out
}

/// True iff f2 cannot run after f1 on the same train: f2 departs before f1
/// has arrived, finished post-processing and transferred over.
pub fn overlap(f1: &ExtendedTrip, f2: &ExtendedTrip, inst: &Instance) -> bool {
    let transfer = inst.network.duration(f1.arrival_station, f2.departure_station);
    f2.departure_time < f1.arrival_time + f1.post_proc + transfer
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarKey {
    pub slot: usize,
    pub ext: ExtId,
    pub train: TrainId,
}

const ABSENT: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct VariableIndex {
    pub q: usize,
    pub num_ext: usize,
    pub num_trains: usize,
    ids: Vec<u32>,
    pub vars: Vec<VarKey>,
}

impl VariableIndex {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_id(&self, slot: usize, ext: ExtId, train: TrainId) -> Option<usize> {
        let raw = self.ids[(slot * self.num_ext + ext) * self.num_trains + train];
        (raw != ABSENT).then_some(raw as usize)
    }
}

/// Dense ids in (slot, extended trip, train) iteration order. Slot-0
/// combinations the train cannot reach in time get no variable at all.
pub fn filter_variables(inst: &Instance, fall: &[ExtendedTrip], q: usize) -> VariableIndex {
    assert!(q >= 1);
    let num_trains = inst.num_trains();
    let mut ids = vec![ABSENT; q * fall.len() * num_trains];
    let mut vars = Vec::new();
    for slot in 0..q {
        for (ext, f) in fall.iter().enumerate() {
            for (train, z) in inst.trains.iter().enumerate() {
                if slot == 0 {
                    let approach = inst.network.duration(z.initial_station, f.departure_station);
                    if f.departure_time < approach + z.earliest_time {
                        continue;
                    }
                }
                ids[(slot * fall.len() + ext) * num_trains + train] = vars.len() as u32;
                vars.push(VarKey { slot, ext, train });
            }
        }
    }
    VariableIndex { q, num_ext: fall.len(), num_trains, ids, vars }
}

pub fn maintenance_urgency(mt: &MaintenanceType, initial_km: Km) -> f64 {
    1.0 / ((0.002 * (mt.limit - URGENCY_MIDPOINT_KM - initial_km) as f64).exp() + 1.0)
}

pub fn immediate_action(mt: &MaintenanceType, initial_km: Km) -> bool {
    mt.limit < initial_km + IMMEDIATE_MARGIN_KM
}

/// The urgency weight as a scaled integer, rounded exactly once per
/// (type, train) pair.
fn urgency_atom(mt: &MaintenanceType, initial_km: Km, weights: &Weights) -> i64 {
    (maintenance_urgency(mt, initial_km) * (weights.maintenance * SCALE) as f64).round() as i64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermFamily {
    Reward,
    C1,
    C2,
    C3,
    Km,
    Cm1,
    Cm2,
    Cm3,
}

pub const TERM_FAMILIES: [TermFamily; 8] = [
    TermFamily::Reward,
    TermFamily::C1,
    TermFamily::C2,
    TermFamily::C3,
    TermFamily::Km,
    TermFamily::Cm1,
    TermFamily::Cm2,
    TermFamily::Cm3,
];

impl TermFamily {
    pub fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            TermFamily::Reward => "reward",
            TermFamily::C1 => "slot-clash",
            TermFamily::C2 => "duplicate-trip",
            TermFamily::C3 => "overlap",
            TermFamily::Km => "empty-km",
            TermFamily::Cm1 => "maint-now",
            TermFamily::Cm2 => "maint-soon",
            TermFamily::Cm3 => "maint-excess",
        }
    }
}

enum TermPart {
    /// Off-diagonal product term between two distinct variables.
    Pair(u32, u32, i64),
    Linear(u32, i64),
    Const(i64),
}

/// Walks every term of the cost function once, scaled by SCALE. Symmetric
/// double sums are emitted as one Pair per unordered variable pair with the
/// coefficient already doubled.
fn for_each_term(
    inst: &Instance,
    fall: &[ExtendedTrip],
    index: &VariableIndex,
    weights: &Weights,
    mut sink: impl FnMut(TermPart, TermFamily) -> ControlFlow<()>,
) {
    macro_rules! emit {
        ($part:expr, $fam:expr) => {
            if sink($part, $fam).is_break() {
                return;
            }
        };
    }

    let q = index.q;
    let num_trains = index.num_trains;

    // per (slot, train): variable ids ascending by extended-trip id
    let mut by_slot_train: Vec<Vec<(ExtId, u32)>> = vec![Vec::new(); q * num_trains];
    // per base trip: every variable of every variant
    let mut by_base: Vec<Vec<u32>> = vec![Vec::new(); inst.num_trips()];
    // per (type, train): variables of that type's variants, slot recorded
    let mut by_type_train: Vec<Vec<(usize, u32)>> =
        vec![Vec::new(); inst.num_maint_types() * num_trains];
    for (id, key) in index.vars.iter().enumerate() {
        let id = id as u32;
        by_slot_train[key.slot * num_trains + key.train].push((key.ext, id));
        by_base[fall[key.ext].base].push(id);
        if let Some((u, _)) = fall[key.ext].maintenance {
            by_type_train[u * num_trains + key.train].push((key.slot, id));
        }
    }

    // slot-0 reward and approach km (diagonal)
    for &(ext, id) in by_slot_train.iter().take(num_trains).flatten() {
        let key = index.vars[id as usize];
        emit!(TermPart::Linear(id, -weights.reward * SCALE), TermFamily::Reward);
        let dist = inst
            .network
            .distance(inst.trains[key.train].initial_station, fall[ext].departure_station);
        if weights.km * dist != 0 {
            emit!(TermPart::Linear(id, weights.km * dist * SCALE), TermFamily::Km);
        }
    }

    // consecutive-slot reward and connection km
    for z in 0..num_trains {
        for i in 0..q.saturating_sub(1) {
            for &(e1, a) in &by_slot_train[i * num_trains + z] {
                for &(e2, b) in &by_slot_train[(i + 1) * num_trains + z] {
                    if e1 == e2 {
                        continue;
                    }
                    emit!(TermPart::Pair(a, b, -weights.reward * SCALE), TermFamily::Reward);
                    let dist = inst
                        .network
                        .distance(fall[e1].arrival_station, fall[e2].departure_station);
                    if weights.km * dist != 0 {
                        emit!(TermPart::Pair(a, b, weights.km * dist * SCALE), TermFamily::Km);
                    }
                }
            }
        }
    }

    // same slot, same train, two different trips
    for group in &by_slot_train {
        for (x, &(_, a)) in group.iter().enumerate() {
            for &(_, b) in &group[x + 1..] {
                emit!(TermPart::Pair(a, b, 2 * weights.penalty * SCALE), TermFamily::C1);
            }
        }
    }

    // the same base trip selected twice anywhere
    for group in &by_base {
        for (x, &a) in group.iter().enumerate() {
            for &b in &group[x + 1..] {
                emit!(TermPart::Pair(a, b, 2 * weights.penalty * SCALE), TermFamily::C2);
            }
        }
    }

    // time overlap between an earlier and a later slot of one train
    let ne = fall.len();
    let mut overlaps = vec![false; ne * ne];
    for (x, f1) in fall.iter().enumerate() {
        for (y, f2) in fall.iter().enumerate() {
            overlaps[x * ne + y] = overlap(f1, f2, inst);
        }
    }
    for z in 0..num_trains {
        for i1 in 0..q {
            for i2 in i1 + 1..q {
                for &(e1, a) in &by_slot_train[i1 * num_trains + z] {
                    for &(e2, b) in &by_slot_train[i2 * num_trains + z] {
                        if overlaps[e1 * ne + e2] {
                            emit!(TermPart::Pair(a, b, weights.penalty * SCALE), TermFamily::C3);
                        }
                    }
                }
            }
        }
    }

    // maintenance pressure: (sum - 1)^2 over the due window, expanded; plus
    // the discouragement term on every maintenance variant
    for (z, train) in inst.trains.iter().enumerate() {
        for (u, mt) in inst.maintenance_types.iter().enumerate() {
            let atom = urgency_atom(mt, train.initial_km[u], weights);
            let complement = weights.maintenance * SCALE - atom;
            let group = &by_type_train[u * num_trains + z];
            let (family, square_vars): (TermFamily, Vec<u32>) =
                if immediate_action(mt, train.initial_km[u]) {
                    (
                        TermFamily::Cm1,
                        group.iter().filter(|&&(s, _)| s == 0).map(|&(_, id)| id).collect(),
                    )
                } else {
                    (TermFamily::Cm2, group.iter().map(|&(_, id)| id).collect())
                };
            for (x, &a) in square_vars.iter().enumerate() {
                for &b in &square_vars[x + 1..] {
                    emit!(TermPart::Pair(a, b, 2 * atom), family);
                }
            }
            for &a in &square_vars {
                emit!(TermPart::Linear(a, -atom), family);
            }
            emit!(TermPart::Const(atom), family);
            if complement != 0 {
                for &(_, a) in group {
                    emit!(TermPart::Linear(a, complement), TermFamily::Cm3);
                }
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum QuboError {
    #[error("matrix has more than {cap} non-zero entries")]
    TooLarge { cap: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Upper-triangular sparse QUBO. Numerators over SCALE; `tags` records which
/// term families touched each entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuboModel {
    pub num_vars: usize,
    pub entries: Vec<(u32, u32, i64, u8)>,
    pub offset: i64,
    pub weights: Weights,
}

pub const DEFAULT_NONZERO_CAP: usize = 2_000_000;

pub fn assemble_qubo(
    inst: &Instance,
    fall: &[ExtendedTrip],
    index: &VariableIndex,
    weights: &Weights,
    nonzero_cap: usize,
) -> Result<QuboModel, QuboError> {
    let mut map: BTreeMap<(u32, u32), (i64, u8)> = BTreeMap::new();
    let mut offset = 0i64;
    let mut overflow = false;
    for_each_term(inst, fall, index, weights, |part, family| {
        let (a, b, c) = match part {
            TermPart::Pair(a, b, c) => (a.min(b), a.max(b), c),
            TermPart::Linear(a, c) => (a, a, c),
            TermPart::Const(c) => {
                offset += c;
                return ControlFlow::Continue(());
            }
        };
        let slot = map.entry((a, b)).or_insert((0, 0));
        slot.0 += c;
        slot.1 |= family.bit();
        if map.len() > nonzero_cap {
            overflow = true;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });
    if overflow {
        return Err(QuboError::TooLarge { cap: nonzero_cap });
    }
    let entries = map
        .into_iter()
        .filter(|&(_, (c, _))| c != 0)
        .map(|((a, b), (c, tags))| (a, b, c, tags))
        .collect();
    Ok(QuboModel { num_vars: index.num_vars(), entries, offset, weights: *weights })
}

/// Scaled energy (numerator over SCALE) of a full assignment.
pub fn evaluate_energy(model: &QuboModel, bits: &[bool]) -> i128 {
    assert_eq!(bits.len(), model.num_vars);
    let mut energy = model.offset as i128;
    for &(a, b, c, _) in &model.entries {
        if bits[a as usize] && bits[b as usize] {
            energy += c as i128;
        }
    }
    energy
}

/// Scaled energy split by term family, recomputed from the generators so the
/// parts are exact rather than read off folded matrix entries.
pub fn energy_breakdown(
    inst: &Instance,
    fall: &[ExtendedTrip],
    index: &VariableIndex,
    weights: &Weights,
    bits: &[bool],
) -> [i128; 8] {
    assert_eq!(bits.len(), index.num_vars());
    let mut totals = [0i128; 8];
    for_each_term(inst, fall, index, weights, |part, family| {
        let value = match part {
            TermPart::Pair(a, b, c) => {
                if bits[a as usize] && bits[b as usize] {
                    c
                } else {
                    0
                }
            }
            TermPart::Linear(a, c) => {
                if bits[a as usize] {
                    c
                } else {
                    0
                }
            }
            TermPart::Const(c) => c,
        };
        totals[family as usize] += value as i128;
        ControlFlow::Continue(())
    });
    totals
}

const FIVE_POW_20: i128 = 95_367_431_640_625;
const TEN_POW_20: i128 = 100_000_000_000_000_000_000;

/// Exact decimal form of numerator/SCALE, trailing zeros trimmed.
pub fn decimal(numerator: i64) -> String {
    decimal_i128(numerator as i128)
}

/// As `decimal`, for summed energies that outgrow i64.
pub fn decimal_i128(numerator: i128) -> String {
    let value = numerator * FIVE_POW_20;
    let sign = if value < 0 { "-" } else { "" };
    let abs = value.unsigned_abs();
    let int = abs / TEN_POW_20 as u128;
    let frac = abs % TEN_POW_20 as u128;
    if frac == 0 {
        return format!("{sign}{int}");
    }
    let mut digits = format!("{frac:020}");
    while digits.ends_with('0') {
        digits.pop();
    }
    format!("{sign}{int}.{digits}")
}

fn parse_decimal(s: &str) -> Option<i64> {
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1i128, rest),
        None => (1i128, s),
    };
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int.is_empty() || frac.len() > 20 {
        return None;
    }
    if !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if s.contains('.') && frac.is_empty() {
        return None;
    }
    let int: i128 = int.parse().ok()?;
    let mut padded = frac.to_string();
    while padded.len() < 20 {
        padded.push('0');
    }
    let frac: i128 = if padded.is_empty() { 0 } else { padded.parse().ok()? };
    let total = int.checked_mul(TEN_POW_20)?.checked_add(frac)?;
    if total % FIVE_POW_20 != 0 {
        return None;
    }
    let numerator = sign * (total / FIVE_POW_20);
    i64::try_from(numerator).ok()
}

/// Header "vars nnz offset", then one "i j coefficient" line per non-zero
/// entry with i <= j, sorted. Byte-stable for equal models.
pub fn export_qubo(model: &QuboModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", model.num_vars, model.entries.len(), decimal(model.offset));
    for &(a, b, c, _) in &model.entries {
        let _ = writeln!(out, "{a} {b} {}", decimal(c));
    }
    out
}

/// Strict inverse of export_qubo. Term tags and weights are not part of the
/// text format; parsed models carry empty tags and default weights.
pub fn parse_qubo(text: &str) -> Result<QuboModel, QuboError> {
    let err = |line: usize, msg: &str| QuboError::Parse { line, msg: msg.into() };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [vars, nnz, offset] = fields[..] else {
        return Err(err(1, "header must be: vars nnz offset"));
    };
    let num_vars: usize = vars.parse().map_err(|_| err(1, "bad variable count"))?;
    let nnz: usize = nnz.parse().map_err(|_| err(1, "bad entry count"))?;
    let offset = parse_decimal(offset).ok_or_else(|| err(1, "bad offset"))?;
    let mut entries: Vec<(u32, u32, i64, u8)> = Vec::with_capacity(nnz);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [a, b, c] = fields[..] else {
            return Err(err(lineno, "entry must be: i j coefficient"));
        };
        let a: u32 = a.parse().map_err(|_| err(lineno, "bad row index"))?;
        let b: u32 = b.parse().map_err(|_| err(lineno, "bad column index"))?;
        let c = parse_decimal(c).ok_or_else(|| err(lineno, "bad coefficient"))?;
        if a > b || (b as usize) >= num_vars {
            return Err(err(lineno, "indices out of order or range"));
        }
        if let Some(&(pa, pb, _, _)) = entries.last() {
            if (a, b) <= (pa, pb) {
                return Err(err(lineno, "entries not strictly sorted"));
            }
        }
        if c == 0 {
            return Err(err(lineno, "zero coefficient"));
        }
        entries.push((a, b, c, 0));
    }
    if entries.len() != nnz {
        return Err(err(1, "entry count does not match header"));
    }
    Ok(QuboModel { num_vars, entries, offset, weights: Weights::default() })
}
