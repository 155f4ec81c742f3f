use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rstock::io::{generate_artificial, parse_instance, subset_instance, write_instance, GeneratorConfig};
use rstock::model::{validate_instance, Instance, Schedule};
use rstock::qubo::{
    assemble_qubo, build_extended_trips, export_qubo, filter_variables, parse_qubo, Weights,
    DEFAULT_NONZERO_CAP,
};
use rstock::report::{compute_metrics, render_gantt, validate_schedule, MetricsRow};
use rstock::search::{branch_and_bound, SearchConfig};
use rstock::solve::{decode_solution, solve, SolverParams, Variant};

#[derive(Parser)]
#[command(name = "rstock", version, about = "Rolling stock scheduling with maintenance")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an artificial timetable instance
    Generate {
        #[arg(long, default_value_t = 72)]
        trips: usize,
        #[arg(long, default_value_t = 39)]
        trains: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Keep a random fraction of an instance's trips
    Subset {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact branch and bound over the slot model
    SolveCp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        node_limit: Option<u64>,
        #[arg(long, default_value_t = 1_000_000)]
        big_m: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the QUBO matrix and write its coordinate-list form
    BuildQubo {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        qubo: QuboArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimise a QUBO, either a prebuilt matrix or straight from an instance
    SolveQubo {
        #[arg(long = "in", conflicts_with = "instance", required_unless_present = "instance")]
        input: Option<PathBuf>,
        /// Build, solve and decode in one step
        #[arg(long)]
        instance: Option<PathBuf>,
        #[command(flatten)]
        qubo: QuboArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run solvers, validate, and emit the metrics table plus Gantt charts
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "cp")]
        methods: Vec<Method>,
        #[arg(long)]
        time_limit: Option<f64>,
        #[command(flatten)]
        qubo: QuboArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct QuboArgs {
    #[arg(long, default_value_t = 3)]
    q: usize,
    /// Comma list of reward=, penalty=, km=, maintenance= overrides
    #[arg(long, value_parser = parse_weights, default_value = "")]
    weights: Weights,
    #[arg(long, default_value_t = DEFAULT_NONZERO_CAP)]
    max_nonzeros: usize,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = CliVariant::Tabu)]
    variant: CliVariant,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 2000)]
    iterations: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliVariant {
    Tabu,
    Sa,
    Exhaustive,
}

impl From<CliVariant> for Variant {
    fn from(v: CliVariant) -> Variant {
        match v {
            CliVariant::Tabu => Variant::Tabu,
            CliVariant::Sa => Variant::Annealing,
            CliVariant::Exhaustive => Variant::Exhaustive,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Cp,
    Tabu,
    Sa,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Cp => "cp",
            Method::Tabu => "tabu",
            Method::Sa => "sa",
        }
    }
}

fn parse_weights(s: &str) -> Result<Weights, String> {
    let mut w = Weights::default();
    for part in s.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
        let value: i64 = value.parse().map_err(|_| format!("bad number in {part:?}"))?;
        match key {
            "reward" => w.reward = value,
            "penalty" => w.penalty = value,
            "km" => w.km = value,
            "maintenance" => w.maintenance = value,
            _ => return Err(format!("unknown weight {key:?}")),
        }
    }
    Ok(w)
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let inst = parse_instance(&text)?;
    let problems = validate_instance(&inst);
    if !problems.is_empty() {
        bail!("invalid instance {}:\n  {}", path.display(), problems.join("\n  "));
    }
    Ok(inst)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn solver_params(args: &SolverArgs, time_limit: Option<f64>) -> SolverParams {
    SolverParams {
        variant: args.variant.into(),
        seed: args.seed,
        time_limit_secs: time_limit,
        max_iterations: args.iterations,
        restarts: args.restarts,
        workers: args.workers,
        ..SolverParams::default()
    }
}

fn run_cp(inst: &Instance, cfg: SearchConfig) -> Result<(Schedule, f64)> {
    let started = Instant::now();
    let outcome = branch_and_bound(inst, cfg);
    let elapsed = started.elapsed().as_secs_f64();
    let s = &outcome.stats;
    eprintln!(
        "cp: nodes {} fails {} solutions {}{}",
        s.nodes,
        s.fails,
        s.solutions,
        if s.limit_reached { " (limit reached)" } else { "" }
    );
    for imp in &outcome.improvements {
        eprintln!(
            "  {:>8.2}s  trips {:>3}  empty-km {:>6}  objective {}",
            imp.at_secs, imp.trips, imp.empty_km, imp.objective
        );
    }
    let best = outcome.best.ok_or_else(|| anyhow!("search found no schedule"))?;
    Ok((best, elapsed))
}

struct BuiltQubo {
    fall: Vec<rstock::qubo::ExtendedTrip>,
    index: rstock::qubo::VariableIndex,
    model: rstock::qubo::QuboModel,
    build_secs: f64,
}

fn build_model(inst: &Instance, args: &QuboArgs) -> Result<BuiltQubo> {
    let started = Instant::now();
    let fall = build_extended_trips(inst);
    let index = filter_variables(inst, &fall, args.q);
    let model = assemble_qubo(inst, &fall, &index, &args.weights, args.max_nonzeros)
        .map_err(|e| anyhow!("{e}"))?;
    let build_secs = started.elapsed().as_secs_f64();
    eprintln!(
        "qubo: {} variables, {} non-zeros, built in {build_secs:.2}s",
        model.num_vars,
        model.entries.len()
    );
    Ok(BuiltQubo { fall, index, model, build_secs })
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Generate { trips, trains, seed, out } => {
            let cfg = GeneratorConfig {
                trip_count: trips,
                train_count: trains,
                seed,
                ..GeneratorConfig::default()
            };
            let inst = generate_artificial(&cfg)?;
            emit(&out, &write_instance(&inst)?)
        }
        Cmd::Subset { input, fraction, seed, out } => {
            let inst = load_instance(&input)?;
            let sub = subset_instance(&inst, fraction, seed)?;
            emit(&out, &write_instance(&sub)?)
        }
        Cmd::SolveCp { input, time_limit, node_limit, big_m, out } => {
            let inst = load_instance(&input)?;
            let cfg = SearchConfig {
                big_m,
                time_limit_secs: time_limit,
                node_limit,
                ..SearchConfig::default()
            };
            let (best, _) = run_cp(&inst, cfg)?;
            emit(&out, &serde_json::to_string_pretty(&best)?)
        }
        Cmd::BuildQubo { input, qubo, out } => {
            let inst = load_instance(&input)?;
            let built = build_model(&inst, &qubo)?;
            emit(&out, &export_qubo(&built.model))
        }
        Cmd::SolveQubo { input, instance, qubo, solver, out } => {
            if let Some(path) = instance {
                let inst = load_instance(&path)?;
                let built = build_model(&inst, &qubo)?;
                let params = solver_params(&solver, None);
                let result = solve(&built.model, &params)?;
                eprintln!("energy {}", rstock::qubo::decimal_i128(result.energy));
                let schedule = decode_solution(&inst, &built.fall, &built.index, &result.bits);
                emit(&out, &serde_json::to_string_pretty(&schedule)?)
            } else {
                let path = input.expect("clap enforces one of --in/--instance");
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let model = parse_qubo(&text)?;
                let params = solver_params(&solver, None);
                let result = solve(&model, &params)?;
                eprintln!("energy {}", rstock::qubo::decimal_i128(result.energy));
                let bits: String =
                    result.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
                emit(&out, &format!("{bits}\n"))
            }
        }
        Cmd::Report { input, methods, time_limit, qubo, solver, out_dir } => {
            let inst = load_instance(&input)?;
            if let Some(dir) = &out_dir {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
            }
            let mut rows = Vec::new();
            for method in methods {
                let (schedule, build_secs, solve_secs) = match method {
                    Method::Cp => {
                        let cfg = SearchConfig {
                            time_limit_secs: time_limit,
                            ..SearchConfig::default()
                        };
                        let (best, secs) = run_cp(&inst, cfg)?;
                        (best, 0.0, secs)
                    }
                    Method::Tabu | Method::Sa => {
                        let built = build_model(&inst, &qubo)?;
                        let mut params = solver_params(&solver, time_limit);
                        params.variant = if method == Method::Tabu {
                            Variant::Tabu
                        } else {
                            Variant::Annealing
                        };
                        let started = Instant::now();
                        let result = solve(&built.model, &params)?;
                        let solve_secs = started.elapsed().as_secs_f64();
                        let schedule =
                            decode_solution(&inst, &built.fall, &built.index, &result.bits);
                        (schedule, built.build_secs, solve_secs)
                    }
                };
                let report = validate_schedule(&inst, &schedule)?;
                rows.push(MetricsRow {
                    method: method.name().into(),
                    raw_trips: report.raw_allocated,
                    corrected_trips: report.corrected_allocated,
                    available_trips: inst.num_trips(),
                    used_trains: report.used_trains,
                    available_trains: inst.num_trains(),
                    empty_km: report.empty_km,
                    build_secs,
                    solve_secs,
                });
                if let Some(dir) = &out_dir {
                    let sched_path = dir.join(format!("schedule-{}.json", method.name()));
                    std::fs::write(&sched_path, serde_json::to_string_pretty(&schedule)?)?;
                    let gantt_path = dir.join(format!("gantt-{}.svg", method.name()));
                    std::fs::write(&gantt_path, render_gantt(&inst, &report))?;
                }
            }
            let table = compute_metrics(&rows);
            print!("{table}");
            if let Some(dir) = &out_dir {
                std::fs::write(dir.join("metrics.txt"), &table)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
