//! Multi-seed experiments: replanning along a moving start, the p_scan
//! study and the mission run.
//!
//! A cell is one (algorithm, p_scan, seed) triple. Cells are independent and
//! run on a rayon pool; inside a cell the start walks the trajectory in
//! order so warm-start state (forest or waypoint cache) carries over. The
//! planner seed for trajectory step `i` is `mix_seed([seed, i])` for every
//! algorithm, so all algorithms see the same primary stream at a given step.

use std::io::{self, Write};
use std::time::Duration;

use rayon::prelude::*;

use crate::energy::{mix_seed, run_mission, EnergyError, EnergyParams, MissionPlan, MissionTrace};
use crate::geom::{Point, Pose, RobotParams, WorldModel};
use crate::planners::{plan_rrt_star, run_algorithm, Algorithm, PlanStatus, PlannerParams};
use crate::tree::Forest;

/// Start poses along a line of constant x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub x: f64,
    pub y_start: f64,
    pub y_end: f64,
    pub y_step: f64,
    /// Radians.
    pub heading: f64,
}

impl Trajectory {
    pub fn poses(&self) -> Vec<Pose> {
        let n = ((self.y_end - self.y_start) / self.y_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| Pose::new(self.x, self.y_start + i as f64 * self.y_step, self.heading))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub world: WorldModel,
    pub robot: RobotParams,
    pub params: PlannerParams,
    pub forest_capacity: usize,
    pub goal: Point,
    pub trajectory: Trajectory,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub p_scan_values: Vec<f64>,
}

/// One planner call.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub algorithm: Algorithm,
    /// Scan probability, for the dynamic planner only.
    pub p_scan: Option<f64>,
    pub seed: u64,
    pub start: Pose,
    pub status: PlanStatus,
    pub nodes_expanded: usize,
    pub nodes_replicated: usize,
    pub wall_time: Duration,
    pub path_cost: Option<f64>,
}

pub const RAW_HEADER: &str =
    "algorithm,p_scan,seed,start_x,start_y,nodes_expanded,nodes_replicated,wall_time_ms,path_cost,status";

/// Mean, median and sample standard deviation (0 for fewer than two values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl Summary {
    /// NaN everywhere for an empty slice.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                median: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, median, std }
    }
}

/// Statistics over seeds for one (algorithm, p_scan, y) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub algorithm: Algorithm,
    pub p_scan: Option<f64>,
    pub y: f64,
    pub seeds: usize,
    pub found: usize,
    pub wall_time_ms: Summary,
    pub nodes_expanded: Summary,
    /// Over the runs that found a path.
    pub path_cost: Summary,
}

pub const AGG_HEADER: &str = "algorithm,p_scan,y,seeds,found,\
wall_time_ms_mean,wall_time_ms_median,wall_time_ms_std,\
nodes_expanded_mean,nodes_expanded_median,nodes_expanded_std,\
path_cost_mean,path_cost_median,path_cost_std";

/// Runs one cell along the whole trajectory. The dynamic planner starts
/// from an empty forest, so its first call is a plain RRT* whose path seeds
/// the forest; ERRT starts with an empty cache.
pub fn run_cell(sc: &Scenario, algorithm: Algorithm, p_scan: Option<f64>, seed: u64) -> Vec<RawRow> {
    let mut params = sc.params;
    if let Some(p) = p_scan {
        params.p_scan = p;
    }
    let mut forest = Forest::new(sc.forest_capacity);
    let mut cache = Vec::new();
    sc.trajectory
        .poses()
        .into_iter()
        .enumerate()
        .map(|(i, start)| {
            let p = params.with_seed(mix_seed(&[seed, i as u64]));
            let result = if algorithm == Algorithm::Dynamic && forest.is_empty() {
                let r = plan_rrt_star(start, sc.goal, &sc.world, &sc.robot, &p, None);
                if let Some(path) = &r.path {
                    forest.push(path.clone());
                }
                r
            } else {
                run_algorithm(algorithm, start, sc.goal, &sc.world, &sc.robot, &p, &mut forest, &mut cache)
            };
            RawRow {
                algorithm,
                p_scan: (algorithm == Algorithm::Dynamic).then_some(params.p_scan),
                seed,
                start,
                status: result.status,
                nodes_expanded: result.nodes_expanded,
                nodes_replicated: result.nodes_replicated,
                wall_time: result.wall_time,
                path_cost: result.cost(),
            }
        })
        .collect()
}

fn run_cells(sc: &Scenario, cells: Vec<(Algorithm, Option<f64>, u64)>, threads: Option<usize>) -> Vec<RawRow> {
    let work = || -> Vec<RawRow> {
        cells
            .par_iter()
            .map(|&(a, p, s)| run_cell(sc, a, p, s))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(work),
        None => work(),
    }
}

/// Every scenario algorithm for every seed, raw rows in (algorithm, seed,
/// trajectory) order.
pub fn run_replanning_benchmark(sc: &Scenario, threads: Option<usize>) -> Vec<RawRow> {
    let cells = sc
        .algorithms
        .iter()
        .flat_map(|&a| sc.seeds.iter().map(move |&s| (a, None, s)))
        .collect();
    run_cells(sc, cells, threads)
}

/// The dynamic planner once per p_scan value with the same seeds, plus a
/// cold RRT* reference.
pub fn run_pscan_study(sc: &Scenario, threads: Option<usize>) -> Vec<RawRow> {
    let mut cells: Vec<_> = sc.seeds.iter().map(|&s| (Algorithm::RrtStar, None, s)).collect();
    for &p in &sc.p_scan_values {
        cells.extend(sc.seeds.iter().map(|&s| (Algorithm::Dynamic, Some(p), s)));
    }
    run_cells(sc, cells, threads)
}

/// Zeroes wall times so output files are reproducible byte for byte.
pub fn strip_timing(rows: &mut [RawRow]) {
    for r in rows {
        r.wall_time = Duration::ZERO;
    }
}

/// Groups rows by (algorithm, p_scan, start y) in order of first appearance.
pub fn aggregate(rows: &[RawRow]) -> Vec<StatRow> {
    let mut keys: Vec<(Algorithm, Option<f64>, f64)> = Vec::new();
    let mut groups: Vec<Vec<&RawRow>> = Vec::new();
    for r in rows {
        let key = (r.algorithm, r.p_scan, r.start.y);
        match keys.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(r),
            None => {
                keys.push(key);
                groups.push(vec![r]);
            }
        }
    }
    keys.into_iter()
        .zip(groups)
        .map(|((algorithm, p_scan, y), g)| {
            let times: Vec<f64> = g.iter().map(|r| r.wall_time.as_secs_f64() * 1e3).collect();
            let nodes: Vec<f64> = g.iter().map(|r| r.nodes_expanded as f64).collect();
            let costs: Vec<f64> = g.iter().filter_map(|r| r.path_cost).collect();
            StatRow {
                algorithm,
                p_scan,
                y,
                seeds: g.len(),
                found: g.iter().filter(|r| r.status == PlanStatus::Found).count(),
                wall_time_ms: Summary::of(&times),
                nodes_expanded: Summary::of(&nodes),
                path_cost: Summary::of(&costs),
            }
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

/// Floats use the shortest representation that parses back exactly.
pub fn write_raw_csv<W: Write>(rows: &[RawRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{RAW_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            opt(r.p_scan),
            r.seed,
            r.start.x,
            r.start.y,
            r.nodes_expanded,
            r.nodes_replicated,
            r.wall_time.as_secs_f64() * 1e3,
            opt(r.path_cost),
            r.status
        )?;
    }
    Ok(())
}

pub fn write_agg_csv<W: Write>(stats: &[StatRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{AGG_HEADER}")?;
    for s in stats {
        let sum = |x: &Summary| format!("{},{},{}", x.mean, x.median, x.std);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.algorithm,
            opt(s.p_scan),
            s.y,
            s.seeds,
            s.found,
            sum(&s.wall_time_ms),
            sum(&s.nodes_expanded),
            sum(&s.path_cost)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionSummary {
    pub seed: u64,
    pub completed: bool,
    pub recharges: usize,
    pub station_switches: usize,
    pub distance: f64,
    pub wall_time: Duration,
    pub min_battery: f64,
}

#[derive(Debug, Clone)]
pub struct MissionRun {
    pub trace: MissionTrace,
    pub summary: MissionSummary,
    pub error: Option<EnergyError>,
}

pub fn run_mission_benchmark(
    mission: &MissionPlan,
    world: &WorldModel,
    robot: &RobotParams,
    eparams: &EnergyParams,
    pparams: &PlannerParams,
    seed: u64,
) -> MissionRun {
    let mut mission = mission.clone();
    let (trace, error) = match run_mission(&mut mission, world, robot, eparams, pparams, seed) {
        Ok(trace) => (trace, None),
        Err(f) => (f.trace, Some(f.error)),
    };
    let summary = MissionSummary {
        seed,
        completed: trace.completed,
        recharges: trace.arrivals.len(),
        station_switches: trace.station_switches(),
        distance: trace.distance,
        wall_time: trace.total_replan_time(),
        min_battery: trace.min_battery,
    };
    MissionRun { trace, summary, error }
}

/// Independent missions, one per seed, in seed order.
pub fn run_missions(
    mission: &MissionPlan,
    world: &WorldModel,
    robot: &RobotParams,
    eparams: &EnergyParams,
    pparams: &PlannerParams,
    seeds: &[u64],
    threads: Option<usize>,
) -> Vec<MissionRun> {
    let work = || {
        seeds
            .par_iter()
            .map(|&s| run_mission_benchmark(mission, world, robot, eparams, pparams, s))
            .collect()
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(work),
        None => work(),
    }
}
