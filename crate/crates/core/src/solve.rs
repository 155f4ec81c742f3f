//! Classical QUBO minimisers (tabu search, simulated annealing, exhaustive
//! enumeration) and decoding of bit vectors back into schedules.
//!
//! Tabu search and annealing run as seeded multi-start workers; the winner
//! is the lowest energy with ties to the lowest worker index, so results are
//! reproducible for a fixed seed regardless of thread scheduling.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Activity, Instance, Schedule};
use crate::qubo::{evaluate_energy, ExtendedTrip, QuboModel, VariableIndex, SCALE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Tabu,
    Annealing,
    Exhaustive,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverParams {
    pub variant: Variant,
    pub seed: u64,
    pub time_limit_secs: Option<f64>,
    /// Tabu: candidate-scan iterations per restart. Annealing: cooling sweeps
    /// of one random flip attempt per variable.
    pub max_iterations: u64,
    pub tenure: Option<usize>,
    pub restarts: usize,
    pub workers: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            variant: Variant::Tabu,
            seed: 1,
            time_limit_secs: None,
            max_iterations: 2000,
            tenure: None,
            restarts: 10,
            workers: 1,
            t_start: 2000.0,
            t_end: 0.01,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TracePoint {
    pub iteration: u64,
    pub energy: i128,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub bits: Vec<bool>,
    pub energy: i128,
    pub trace: Vec<TracePoint>,
    pub limit_reached: bool,
}

pub const EXHAUSTIVE_CAP: usize = 24;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("exhaustive enumeration supports at most {EXHAUSTIVE_CAP} variables, model has {0}")]
    TooManyVariables(usize),
}

/// Row-compressed view of the matrix with both orientations of every
/// off-diagonal entry, for O(degree) flip updates.
struct Compiled {
    num_vars: usize,
    offset: i64,
    diag: Vec<i64>,
    row_start: Vec<usize>,
    neighbours: Vec<(u32, i64)>,
}

impl Compiled {
    fn new(model: &QuboModel) -> Self {
        let n = model.num_vars;
        let mut diag = vec![0i64; n];
        let mut degree = vec![0usize; n];
        for &(a, b, c, _) in &model.entries {
            if a == b {
                diag[a as usize] += c;
            } else {
                degree[a as usize] += 1;
                degree[b as usize] += 1;
            }
        }
        let mut row_start = vec![0usize; n + 1];
        for v in 0..n {
            row_start[v + 1] = row_start[v] + degree[v];
        }
        let mut fill = row_start.clone();
        let mut neighbours = vec![(0u32, 0i64); row_start[n]];
        for &(a, b, c, _) in &model.entries {
            if a != b {
                neighbours[fill[a as usize]] = (b, c);
                fill[a as usize] += 1;
                neighbours[fill[b as usize]] = (a, c);
                fill[b as usize] += 1;
            }
        }
        Compiled { num_vars: n, offset: model.offset, diag, row_start, neighbours }
    }

    fn neighbours(&self, v: usize) -> &[(u32, i64)] {
        &self.neighbours[self.row_start[v]..self.row_start[v + 1]]
    }
}

/// Assignment with the incremental flip machinery: `field[v]` is the sum of
/// coefficients from v to set neighbours, so a flip is O(degree).
struct FlipState {
    bits: Vec<bool>,
    field: Vec<i64>,
    energy: i128,
}

impl FlipState {
    fn zeroes(q: &Compiled) -> Self {
        FlipState {
            bits: vec![false; q.num_vars],
            field: vec![0; q.num_vars],
            energy: q.offset as i128,
        }
    }

    fn randomised(q: &Compiled, rng: &mut ChaCha8Rng) -> Self {
        let mut st = FlipState::zeroes(q);
        for v in 0..q.num_vars {
            if rng.random::<bool>() {
                st.flip(q, v);
            }
        }
        st
    }

    fn delta(&self, q: &Compiled, v: usize) -> i64 {
        let d = q.diag[v] + self.field[v];
        if self.bits[v] {
            -d
        } else {
            d
        }
    }

    fn flip(&mut self, q: &Compiled, v: usize) {
        self.energy += self.delta(q, v) as i128;
        self.bits[v] = !self.bits[v];
        let sign = if self.bits[v] { 1 } else { -1 };
        for &(u, c) in q.neighbours(v) {
            self.field[u as usize] += sign * c;
        }
    }
}

/// The flip machinery behind tabu and annealing, exposed so the incremental
/// energies can be checked against `evaluate_energy` from outside.
pub struct Incremental {
    q: Compiled,
    st: FlipState,
}

impl Incremental {
    /// Starts from the all-zero assignment.
    pub fn new(model: &QuboModel) -> Self {
        let q = Compiled::new(model);
        let st = FlipState::zeroes(&q);
        Incremental { q, st }
    }

    pub fn bits(&self) -> &[bool] {
        &self.st.bits
    }

    pub fn energy(&self) -> i128 {
        self.st.energy
    }

    /// Energy change that flipping v would cause.
    pub fn delta(&self, v: usize) -> i64 {
        self.st.delta(&self.q, v)
    }

    pub fn flip(&mut self, v: usize) {
        self.st.flip(&self.q, v);
    }
}

struct Best {
    bits: Vec<bool>,
    energy: i128,
    trace: Vec<TracePoint>,
}

impl Best {
    fn new(st: &FlipState) -> Self {
        Best { bits: st.bits.clone(), energy: st.energy, trace: vec![] }
    }

    fn offer(&mut self, st: &FlipState, iteration: u64) {
        if st.energy < self.energy {
            self.energy = st.energy;
            self.bits.clone_from(&st.bits);
            self.trace.push(TracePoint { iteration, energy: st.energy });
        }
    }
}

fn past(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

fn tabu_worker(
    q: &Compiled,
    params: &SolverParams,
    worker: usize,
    deadline: Option<Instant>,
) -> (SolveResult, usize) {
    let n = q.num_vars;
    let tenure = params.tenure.unwrap_or(10 + (n as f64).sqrt().ceil() as usize) as u64;
    let mut best: Option<Best> = None;
    let mut limit_reached = false;
    let mut iteration = 0u64;
    'restarts: for restart in 0..params.restarts.max(1) {
        let mut rng = worker_rng(params.seed, worker, restart);
        let mut st = if restart == 0 && worker == 0 {
            FlipState::zeroes(q)
        } else {
            FlipState::randomised(q, &mut rng)
        };
        let mut expiry = vec![0u64; n];
        let b = best.get_or_insert_with(|| Best::new(&st));
        b.offer(&st, iteration);
        for _ in 0..params.max_iterations {
            if n == 0 {
                break;
            }
            if past(deadline) {
                limit_reached = true;
                break 'restarts;
            }
            iteration += 1;
            let mut chosen: Option<(i128, usize)> = None;
            for (v, &exp) in expiry.iter().enumerate() {
                let candidate = st.energy + st.delta(q, v) as i128;
                if exp > iteration && candidate >= b.energy {
                    continue;
                }
                if chosen.is_none_or(|(e, _)| candidate < e) {
                    chosen = Some((candidate, v));
                }
            }
            let Some((_, v)) = chosen else { break };
            st.flip(q, v);
            expiry[v] = iteration + tenure;
            b.offer(&st, iteration);
        }
    }
    let best = best.unwrap_or_else(|| Best::new(&FlipState::zeroes(q)));
    (
        SolveResult { bits: best.bits, energy: best.energy, trace: best.trace, limit_reached },
        worker,
    )
}

fn annealing_worker(
    q: &Compiled,
    params: &SolverParams,
    worker: usize,
    deadline: Option<Instant>,
) -> (SolveResult, usize) {
    let n = q.num_vars;
    let mut best: Option<Best> = None;
    let mut limit_reached = false;
    let mut iteration = 0u64;
    'restarts: for restart in 0..params.restarts.max(1) {
        let mut rng = worker_rng(params.seed, worker, restart);
        let mut st = if restart == 0 && worker == 0 {
            FlipState::zeroes(q)
        } else {
            FlipState::randomised(q, &mut rng)
        };
        let b = best.get_or_insert_with(|| Best::new(&st));
        b.offer(&st, iteration);
        if n == 0 {
            break;
        }
        let sweeps = params.max_iterations.max(1);
        let cooling = if sweeps > 1 && params.t_start > params.t_end && params.t_end > 0.0 {
            (params.t_end / params.t_start).powf(1.0 / (sweeps - 1) as f64)
        } else {
            1.0
        };
        let mut temp = params.t_start;
        for _ in 0..sweeps {
            if past(deadline) {
                limit_reached = true;
                break 'restarts;
            }
            for _ in 0..n {
                iteration += 1;
                let v = rng.random_range(0..n);
                let delta = st.delta(q, v);
                let accept = if delta <= 0 {
                    true
                } else if temp <= 0.0 {
                    false
                } else {
                    let scaled = delta as f64 / SCALE as f64;
                    rng.random::<f64>() < (-scaled / temp).exp()
                };
                if accept {
                    st.flip(q, v);
                    b.offer(&st, iteration);
                }
            }
            temp *= cooling;
        }
        // settle into the local optimum
        loop {
            if past(deadline) {
                limit_reached = true;
                break 'restarts;
            }
            let v = (0..n).min_by_key(|&v| st.delta(q, v)).unwrap();
            if st.delta(q, v) >= 0 {
                break;
            }
            iteration += 1;
            st.flip(q, v);
            b.offer(&st, iteration);
        }
    }
    let best = best.unwrap_or_else(|| Best::new(&FlipState::zeroes(q)));
    (
        SolveResult { bits: best.bits, energy: best.energy, trace: best.trace, limit_reached },
        worker,
    )
}

fn worker_rng(seed: u64, worker: usize, restart: usize) -> ChaCha8Rng {
    let mixed = seed
        .wrapping_add((worker as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((restart as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Global minimum by Gray-code enumeration. Ties go to the assignment whose
/// bit vector encodes the smallest integer with bit 0 least significant.
pub fn exhaustive_solve(model: &QuboModel) -> Result<SolveResult, SolveError> {
    let n = model.num_vars;
    if n > EXHAUSTIVE_CAP {
        return Err(SolveError::TooManyVariables(n));
    }
    let q = Compiled::new(model);
    let mut st = FlipState::zeroes(&q);
    let mut best_energy = st.energy;
    let mut best_mask = 0u32;
    for m in 1u32..1u32 << n {
        let bit = m.trailing_zeros() as usize;
        st.flip(&q, bit);
        let mask = m ^ (m >> 1);
        if st.energy < best_energy || (st.energy == best_energy && mask < best_mask) {
            best_energy = st.energy;
            best_mask = mask;
        }
    }
    let bits = (0..n).map(|v| best_mask >> v & 1 == 1).collect();
    Ok(SolveResult {
        bits,
        energy: best_energy,
        trace: vec![TracePoint { iteration: 0, energy: best_energy }],
        limit_reached: false,
    })
}

pub fn solve(model: &QuboModel, params: &SolverParams) -> Result<SolveResult, SolveError> {
    if params.variant == Variant::Exhaustive {
        return exhaustive_solve(model);
    }
    let q = Compiled::new(model);
    let deadline = params
        .time_limit_secs
        .map(|s| Instant::now() + std::time::Duration::from_secs_f64(s));
    let run = |worker: usize| match params.variant {
        Variant::Tabu => tabu_worker(&q, params, worker, deadline),
        Variant::Annealing => annealing_worker(&q, params, worker, deadline),
        Variant::Exhaustive => unreachable!(),
    };
    let workers = params.workers.max(1);
    let mut results: Vec<(SolveResult, usize)> = if workers == 1 {
        vec![run(0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers).map(|w| scope.spawn(move || run(w))).collect();
            handles.into_iter().map(|h| h.join().expect("solver worker panicked")).collect()
        })
    };
    results.sort_by_key(|(r, w)| (r.energy, *w));
    let limit_reached = results.iter().any(|(r, _)| r.limit_reached);
    let mut winner = results.swap_remove(0).0;
    winner.limit_reached = limit_reached;
    debug_assert_eq!(winner.energy, evaluate_energy(model, &winner.bits));
    Ok(winner)
}

/// Raw decode of a bit vector: selected variants become activities in slot
/// order with the connecting empty rides spelled out. No feasibility
/// judgement is made here; the validator deals with infeasible selections.
pub fn decode_solution(
    inst: &Instance,
    fall: &[ExtendedTrip],
    index: &VariableIndex,
    bits: &[bool],
) -> Schedule {
    assert_eq!(bits.len(), index.num_vars());
    let mut picked: Vec<Vec<usize>> = vec![Vec::new(); inst.num_trains()];
    for (id, key) in index.vars.iter().enumerate() {
        if bits[id] {
            picked[key.train].push(key.ext);
        }
    }
    let mut schedule = Schedule::empty(inst.num_trains());
    for (z, exts) in picked.iter().enumerate() {
        let mut pos = inst.trains[z].initial_station;
        let acts = &mut schedule.per_train[z];
        for &e in exts {
            let ext = &fall[e];
            if pos != ext.departure_station {
                acts.push(Activity::EmptyRide {
                    from: pos,
                    to: ext.departure_station,
                    km: inst.network.distance(pos, ext.departure_station),
                });
                schedule.empty_km += inst.network.distance(pos, ext.departure_station);
            }
            if let Some((u, station)) = ext.maintenance {
                acts.push(Activity::MaintenanceTask { mtype: u, station });
                let base_dep = inst.trips[ext.base].departure_station;
                if station != base_dep {
                    acts.push(Activity::EmptyRide {
                        from: station,
                        to: base_dep,
                        km: ext.maintenance_km,
                    });
                    schedule.empty_km += ext.maintenance_km;
                }
            }
            acts.push(Activity::RegularTrip { trip: ext.base });
            schedule.allocated_trips += 1;
            pos = ext.arrival_station;
        }
    }
    schedule
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SelectionReport {
    /// Unordered pairs of selected variables sharing a slot and a train.
    pub slot_clashes: usize,
    /// Unordered pairs of selected variables covering the same base trip.
    pub duplicate_trips: usize,
    /// Selected pairs (earlier slot, later slot) of one train whose trips
    /// cannot run in sequence.
    pub overlaps: usize,
}

impl SelectionReport {
    pub fn is_feasible(&self) -> bool {
        self.slot_clashes == 0 && self.duplicate_trips == 0 && self.overlaps == 0
    }
}

/// Counts the hard-constraint violations of a selection, mirroring the
/// penalty terms: the scaled penalty energy equals
/// penalty * SCALE * (2 * clashes + 2 * duplicates + overlaps).
pub fn validate_selection(
    inst: &Instance,
    fall: &[ExtendedTrip],
    index: &VariableIndex,
    bits: &[bool],
) -> SelectionReport {
    assert_eq!(bits.len(), index.num_vars());
    let set: Vec<usize> =
        (0..index.num_vars()).filter(|&id| bits[id]).collect();
    let mut report = SelectionReport::default();
    for (x, &a) in set.iter().enumerate() {
        for &b in &set[x + 1..] {
            let (ka, kb) = (index.vars[a], index.vars[b]);
            if ka.slot == kb.slot && ka.train == kb.train {
                report.slot_clashes += 1;
            }
            if fall[ka.ext].base == fall[kb.ext].base {
                report.duplicate_trips += 1;
            }
            if ka.train == kb.train && ka.slot != kb.slot {
                let (first, second) =
                    if ka.slot < kb.slot { (ka, kb) } else { (kb, ka) };
                if crate::qubo::overlap(&fall[first.ext], &fall[second.ext], inst) {
                    report.overlaps += 1;
                }
            }
        }
    }
    report
}
