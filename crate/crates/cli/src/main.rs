use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dynrrt::bench::{
    aggregate, run_mission_benchmark, run_pscan_study, run_replanning_benchmark, strip_timing, write_agg_csv,
    write_raw_csv,
};
use dynrrt::config::{load_config, Config};
use dynrrt::energy::EnergyError;
use dynrrt::planners::{run_algorithm, Algorithm, PlanStatus};
use dynrrt::{Forest, Point, Pose};

const EXIT_FAILURE: u8 = 1;
const EXIT_NO_PATH: u8 = 2;
const EXIT_MISSION_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "dynrrt", version, about = "Kinematic RRT planners, path-forest replanning and battery-aware missions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// JSON scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Named variant from the scenario file, merged over the base.
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one path and write it as CSV.
    Plan {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_parser = parse_algo)]
        algo: Algorithm,
        /// X,Y,HEADING with the heading in degrees. Defaults to the config start.
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        start: Option<Pose>,
        /// X,Y. Defaults to the config goal.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        goal: Option<Point>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-seed experiments; writes raw.csv and agg.csv.
    Bench {
        #[command(subcommand)]
        kind: BenchKind,
    },
    /// Run the return-to-station mission and write its trace.
    Mission {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the first seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Record real replanning times instead of zeros.
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Subcommand)]
enum BenchKind {
    /// Every configured algorithm along the start trajectory.
    Replanning(BenchArgs),
    /// The dynamic planner for each configured p_scan value, plus RRT*.
    Pscan(BenchArgs),
}

#[derive(clap::Args)]
struct BenchArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    out_dir: PathBuf,
    /// Record real wall times instead of zeros.
    #[arg(long)]
    timing: bool,
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    Algorithm::parse(s).ok_or_else(|| format!("unknown algorithm `{s}` (rrt, rrt_star, errt, dynamic)"))
}

fn numbers(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n || v.iter().any(|x| !x.is_finite()) {
        return Err(format!("expected {n} comma-separated finite numbers, got `{s}`"));
    }
    Ok(v)
}

fn parse_pose(s: &str) -> Result<Pose, String> {
    let v = numbers(s, 3)?;
    Ok(Pose::new(v[0], v[1], v[2].to_radians()))
}

fn parse_point(s: &str) -> Result<Point, String> {
    let v = numbers(s, 2)?;
    Ok(Point::new(v[0], v[1]))
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_FAILURE,
        message: message.to_string(),
    }
}

fn load(args: &ConfigArgs) -> Result<Config, Failure> {
    load_config(&args.config, args.variant.as_deref()).map_err(fail)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| fail(format!("cannot write {}: {e}", path.display())))
}

fn threads() -> Result<Option<usize>, Failure> {
    match std::env::var("REPLAN_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(fail(format!("REPLAN_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

fn plan(
    cfg: &ConfigArgs,
    algo: Algorithm,
    start: Option<Pose>,
    goal: Option<Point>,
    seed: u64,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let config = load(cfg)?;
    let start = start
        .or(config.start)
        .ok_or_else(|| fail("no start pose: pass --start or set `start` in the config"))?;
    let goal = goal
        .or(config.goal)
        .ok_or_else(|| fail("no goal: pass --goal or set `goal` in the config"))?;
    if !config.world.contains(start.position()) {
        return Err(fail("start lies outside the workspace"));
    }
    if !config.world.contains(goal) {
        return Err(fail("goal lies outside the workspace"));
    }
    let params = config.planner.with_seed(seed);
    let mut forest = Forest::new(config.forest_capacity);
    let mut cache = Vec::new();
    let result = run_algorithm(algo, start, goal, &config.world, &config.robot, &params, &mut forest, &mut cache);
    if let (Some(path), Some(out)) = (&result.path, out) {
        let mut w = create(out)?;
        path.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| fail(format!("cannot write {}: {e}", out.display())))?;
    }
    println!(
        "algorithm={} status={} cost={} nodes_expanded={} nodes_replicated={} time_ms={:.3}",
        algo,
        result.status,
        result.cost().map_or("none".to_string(), |c| format!("{c:.9}")),
        result.nodes_expanded,
        result.nodes_replicated,
        result.wall_time.as_secs_f64() * 1e3
    );
    Ok(match result.status {
        PlanStatus::Found => 0,
        PlanStatus::NodeBudgetExhausted => EXIT_NO_PATH,
    })
}

fn bench(args: &BenchArgs, pscan: bool) -> Result<u8, Failure> {
    let config = load(&args.cfg)?;
    let scenario = config.scenario().map_err(fail)?;
    let threads = threads()?;
    let mut rows = if pscan {
        run_pscan_study(&scenario, threads)
    } else {
        run_replanning_benchmark(&scenario, threads)
    };
    if !args.timing {
        strip_timing(&mut rows);
    }
    fs::create_dir_all(&args.out_dir).map_err(|e| fail(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let raw_path = args.out_dir.join("raw.csv");
    let agg_path = args.out_dir.join("agg.csv");
    let mut raw = create(&raw_path)?;
    write_raw_csv(&rows, &mut raw)
        .and_then(|_| raw.flush())
        .map_err(|e| fail(format!("cannot write {}: {e}", raw_path.display())))?;
    let stats = aggregate(&rows);
    let mut agg = create(&agg_path)?;
    write_agg_csv(&stats, &mut agg)
        .and_then(|_| agg.flush())
        .map_err(|e| fail(format!("cannot write {}: {e}", agg_path.display())))?;
    let found = rows.iter().filter(|r| r.status == PlanStatus::Found).count();
    println!("calls={} found={} groups={}", rows.len(), found, stats.len());
    Ok(0)
}

fn mission(cfg: &ConfigArgs, out: &Path, seed: Option<u64>, timing: bool) -> Result<u8, Failure> {
    let config = load(cfg)?;
    let plan = config.mission_plan().map_err(fail)?;
    let seed = seed.unwrap_or(config.seeds[0]);
    let run = run_mission_benchmark(&plan, &config.world, &config.robot, &config.energy, &config.planner, seed);
    let mut w = create(out)?;
    run.trace
        .write_csv(&mut w, timing)
        .and_then(|_| w.flush())
        .map_err(|e| fail(format!("cannot write {}: {e}", out.display())))?;
    let s = &run.summary;
    println!(
        "seed={} completed={} recharges={} station_switches={} distance={:.6} min_battery={:.6} replan_ms={:.3}",
        s.seed,
        s.completed,
        s.recharges,
        s.station_switches,
        s.distance,
        s.min_battery,
        s.wall_time.as_secs_f64() * 1e3
    );
    match run.error {
        None => Ok(0),
        Some(e @ EnergyError::InvalidMission(_)) => Err(fail(e)),
        Some(e) => Err(Failure {
            code: EXIT_MISSION_FAILED,
            message: format!("mission failed: {e}"),
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Plan {
            cfg,
            algo,
            start,
            goal,
            seed,
            out,
        } => plan(cfg, *algo, *start, *goal, *seed, out.as_deref()),
        Command::Bench {
            kind: BenchKind::Replanning(args),
        } => bench(args, false),
        Command::Bench {
            kind: BenchKind::Pscan(args),
        } => bench(args, true),
        Command::Mission { cfg, out, seed, timing } => mission(cfg, out, *seed, *timing),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
