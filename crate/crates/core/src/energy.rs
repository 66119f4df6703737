//! Battery bookkeeping, the return-to-station policy and the mission loop.
//!
//! The robot drives a task track at constant speed. Every replanning tick it
//! asks [`decide_return`] for a path to a charging station; it keeps working
//! while that path fits inside `safety_factor * battery` and heads back
//! otherwise. After recharging it drives to the point where it left the
//! task and carries on.

use std::fmt;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::geom::{arc_between, is_feasible, normalize_angle, ArcEdge, Point, Pose, RobotParams, WorldModel};
use crate::numfmt::g9;
use crate::planners::{plan_dynamic, plan_rrt_star, PlannerParams};
use crate::tree::{Forest, PathRecord};

/// Battery may dip this far below zero through round-off before it counts
/// as depleted.
pub const BATTERY_TOL: f64 = 1e-9;
/// Hard stop for runaway missions.
pub const MAX_TICKS: usize = 100_000;
/// Attempts at planning the way back to the task after a recharge.
pub const RESUME_ATTEMPTS: u64 = 2;
/// Rejoin points tried after a recharge, spaced `RESUME_BACKOFF` apart
/// along the task track going backwards from the interruption point.
pub const RESUME_CANDIDATES: usize = 4;
pub const RESUME_BACKOFF: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    /// No affordable path to any station. `any_path` tells whether some
    /// path was found at all, just too expensive.
    #[error("no station is reachable with the remaining battery {battery}")]
    Stranded { battery: f64, any_path: bool },
    #[error("battery depleted at t = {t} (battery {battery})")]
    BatteryDepleted { t: f64, battery: f64 },
    #[error("invalid mission: {0}")]
    InvalidMission(String),
    #[error("mission did not finish within {0} ticks")]
    TickLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub safety_factor: f64,
    /// Task ticks between two return decisions.
    pub replan_period: usize,
    pub battery_capacity: f64,
    /// Simulation time step.
    pub dt: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            safety_factor: 0.8,
            replan_period: 1,
            battery_capacity: 1e9,
            dt: 0.1,
        }
    }
}

impl EnergyParams {
    /// Returns the name of the first violated constraint.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if !(self.safety_factor > 0.0 && self.safety_factor < 1.0) {
            return Err(("safety_factor", format!("must lie in (0, 1), got {}", self.safety_factor)));
        }
        if self.replan_period < 1 {
            return Err(("replan_period", "must be at least 1".into()));
        }
        if !(self.battery_capacity > 0.0) {
            return Err(("battery_capacity", format!("must be positive, got {}", self.battery_capacity)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(("dt", format!("must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub pose: Pose,
    pub battery: f64,
    pub params: RobotParams,
}

/// Task, stations and one forest of old return paths per station.
#[derive(Debug, Clone)]
pub struct MissionPlan {
    pub task_path: Vec<Point>,
    pub stations: Vec<Point>,
    pub forests: Vec<Forest>,
    /// Station the robot currently plans towards.
    pub target: usize,
}

impl MissionPlan {
    /// The initial target is the station closest to the first task waypoint.
    pub fn new(task_path: Vec<Point>, stations: Vec<Point>, forest_capacity: usize) -> Result<Self, EnergyError> {
        if task_path.len() < 2 {
            return Err(EnergyError::InvalidMission("task path needs at least two waypoints".into()));
        }
        if stations.is_empty() {
            return Err(EnergyError::InvalidMission("at least one station is required".into()));
        }
        let start = task_path[0];
        let target = by_distance(&stations, start)[0];
        let forests = stations.iter().map(|_| Forest::new(forest_capacity.max(1))).collect();
        Ok(Self {
            task_path,
            stations,
            forests,
            target,
        })
    }
}

/// Station indices sorted by Euclidean distance from `p`, ties by index.
fn by_distance(stations: &[Point], p: Point) -> Vec<usize> {
    let mut order: Vec<usize> = (0..stations.len()).collect();
    order.sort_by(|&a, &b| stations[a].distance(&p).total_cmp(&stations[b].distance(&p)).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlannerUsed {
    Dynamic,
    RrtStar,
}

impl PlannerUsed {
    pub fn name(&self) -> &'static str {
        match self {
            PlannerUsed::Dynamic => "dynamic",
            PlannerUsed::RrtStar => "rrt_star",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionKind {
    Continue,
    Return { station: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub kind: DecisionKind,
    pub latest_path: PathRecord,
    pub planner_used: PlannerUsed,
    /// Station the path leads to.
    pub station: usize,
}

/// Source of return paths for [`decide_return`].
pub trait ReturnPlanner {
    /// Warm-started plan that may reuse and extend `forest`.
    fn dynamic(&mut self, from: Pose, goal: Point, forest: &mut Forest, seed: u64) -> Option<PathRecord>;
    /// RRT* that may stop as soon as a path of cost at most `budget` exists.
    fn rrt_star(&mut self, from: Pose, goal: Point, budget: f64, seed: u64) -> Option<PathRecord>;
}

/// The planners of this crate on a fixed world.
#[derive(Debug, Clone, Copy)]
pub struct ArcPlanners<'a> {
    pub world: &'a WorldModel,
    pub robot: &'a RobotParams,
    pub params: &'a PlannerParams,
}

impl ReturnPlanner for ArcPlanners<'_> {
    fn dynamic(&mut self, from: Pose, goal: Point, forest: &mut Forest, seed: u64) -> Option<PathRecord> {
        plan_dynamic(from, goal, self.world, self.robot, &self.params.with_seed(seed), forest).path
    }

    fn rrt_star(&mut self, from: Pose, goal: Point, budget: f64, seed: u64) -> Option<PathRecord> {
        plan_rrt_star(from, goal, self.world, self.robot, &self.params.with_seed(seed), Some(budget)).path
    }
}

/// SplitMix64 finaliser, used to derive independent per-call seeds.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        let mut z = h ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

/// Return policy.
///
/// Stations are tried starting with the current target, then the others by
/// distance. For each one the warm-started planner runs first (skipped while
/// the station's forest is empty), then budgeted RRT*. The first path with
/// cost at most `safety_factor * battery` makes its station the target and
/// the robot continues. If none fits, the robot returns along the cheapest
/// path it can still afford.
pub fn decide_return<P: ReturnPlanner>(
    state: &RobotState,
    mission: &mut MissionPlan,
    eparams: &EnergyParams,
    planner: &mut P,
    seed: u64,
) -> Result<Decision, EnergyError> {
    let budget = eparams.safety_factor * state.battery;
    let here = state.pose.position();
    let mut order = vec![mission.target];
    order.extend(by_distance(&mission.stations, here).into_iter().filter(|&s| s != mission.target));

    let mut cheapest: Option<(PathRecord, PlannerUsed, usize)> = None;
    let mut any_path = false;
    let mut consider = |path: &PathRecord, used: PlannerUsed, station: usize| {
        any_path = true;
        if path.cost() <= state.battery && cheapest.as_ref().is_none_or(|(p, ..)| path.cost() < p.cost()) {
            cheapest = Some((path.clone(), used, station));
        }
    };
    for (attempt, &st) in order.iter().enumerate() {
        let goal = mission.stations[st];
        let forest = &mut mission.forests[st];
        if !forest.is_empty() {
            if let Some(path) = planner.dynamic(state.pose, goal, forest, mix_seed(&[seed, st as u64, attempt as u64, 0])) {
                if path.cost() <= budget {
                    mission.target = st;
                    return Ok(Decision {
                        kind: DecisionKind::Continue,
                        latest_path: path,
                        planner_used: PlannerUsed::Dynamic,
                        station: st,
                    });
                }
                consider(&path, PlannerUsed::Dynamic, st);
            }
        }
        if let Some(path) = planner.rrt_star(state.pose, goal, budget, mix_seed(&[seed, st as u64, attempt as u64, 1])) {
            mission.forests[st].push(path.clone());
            if path.cost() <= budget {
                mission.target = st;
                return Ok(Decision {
                    kind: DecisionKind::Continue,
                    latest_path: path,
                    planner_used: PlannerUsed::RrtStar,
                    station: st,
                });
            }
            consider(&path, PlannerUsed::RrtStar, st);
        }
    }
    match cheapest {
        Some((path, used, st)) => {
            mission.target = st;
            Ok(Decision {
                kind: DecisionKind::Return { station: st },
                latest_path: path,
                planner_used: used,
                station: st,
            })
        }
        None => Err(EnergyError::Stranded {
            battery: state.battery,
            any_path,
        }),
    }
}

/// A chain of arcs followed by arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    /// Start pose of each arc and the arc itself.
    segments: Vec<(Pose, ArcEdge)>,
    /// Arc length at the end of each segment.
    ends: Vec<f64>,
    start: Pose,
}

impl Track {
    fn from_segments(start: Pose, segments: Vec<(Pose, ArcEdge)>) -> Self {
        let mut total = 0.0;
        let ends = segments
            .iter()
            .map(|(_, e)| {
                total += e.length;
                total
            })
            .collect();
        Self { segments, ends, start }
    }

    /// Arcs through the waypoints of a planned path. Each arc is the unique
    /// one leaving a waypoint's pose and hitting the next position, which is
    /// exactly the tree edge the path was built from.
    pub fn from_path(path: &PathRecord, robot: &RobotParams) -> Self {
        let start = path.waypoints.first().map_or(Pose::new(0.0, 0.0, 0.0), |w| w.pose);
        let segments = path
            .waypoints
            .windows(2)
            .map(|w| {
                let e = arc_between(&w[0].pose, w[1].pose.position(), robot, 1.0).expect("path edges are forward arcs");
                (w[0].pose, e)
            })
            .collect();
        Self::from_segments(start, segments)
    }

    /// Straight legs through `points` with each corner rounded by a circle
    /// of the minimum turning radius. The robot starts at `points[0]`
    /// facing the first leg.
    pub fn task(points: &[Point], robot: &RobotParams) -> Result<Self, EnergyError> {
        let invalid = |m: String| Err(EnergyError::InvalidMission(m));
        if points.len() < 2 {
            return invalid("task path needs at least two waypoints".into());
        }
        let dirs: Vec<f64> = points.windows(2).map(|w| (w[1].y - w[0].y).atan2(w[1].x - w[0].x)).collect();
        let lens: Vec<f64> = points.windows(2).map(|w| w[0].distance(&w[1])).collect();
        if let Some(i) = lens.iter().position(|&l| l <= 1e-12) {
            return invalid(format!("task waypoints {i} and {} coincide", i + 1));
        }
        let radius = robot.min_turn_radius();
        // tangent length cut from each side of every corner
        let mut cut = vec![0.0; points.len()];
        for i in 1..points.len() - 1 {
            let turn = normalize_angle(dirs[i] - dirs[i - 1]);
            if turn.abs() >= std::f64::consts::PI - 1e-9 {
                return invalid(format!("task path reverses at waypoint {i}"));
            }
            cut[i] = radius * (turn.abs() / 2.0).tan();
        }
        for (i, &l) in lens.iter().enumerate() {
            if cut[i] + cut[i + 1] > l + 1e-12 {
                return invalid(format!("leg {i} is too short for the turning radius"));
            }
        }
        let start = Pose::new(points[0].x, points[0].y, dirs[0]);
        let mut pose = start;
        let mut segments = Vec::new();
        let along = |p: Point, dir: f64, s: f64| Point::new(p.x + s * dir.cos(), p.y + s * dir.sin());
        for i in 0..lens.len() {
            let leg_end = along(points[i], dirs[i], lens[i] - cut[i + 1]);
            if pose.position().distance(&leg_end) > 1e-12 {
                let e = arc_between(&pose, leg_end, robot, 1.0).expect("leg runs along the heading");
                segments.push((pose, e));
                pose = Pose::new(leg_end.x, leg_end.y, dirs[i]);
            }
            if cut[i + 1] > 0.0 {
                let exit = along(points[i + 1], dirs[i + 1], cut[i + 1]);
                let e = arc_between(&pose, exit, robot, 1.0).expect("corner arc turns less than half a circle");
                debug_assert!(is_feasible(&e, robot));
                segments.push((pose, e));
                pose = Pose::new(exit.x, exit.y, dirs[i + 1]);
            }
        }
        Ok(Self::from_segments(start, segments))
    }

    pub fn length(&self) -> f64 {
        self.ends.last().copied().unwrap_or(0.0)
    }

    pub fn segments(&self) -> &[(Pose, ArcEdge)] {
        &self.segments
    }

    /// Pose after arc length `s`, clamped to the track.
    pub fn pose_at(&self, s: f64) -> Pose {
        if self.segments.is_empty() || s <= 0.0 {
            return self.start;
        }
        let i = self.ends.partition_point(|&e| e < s).min(self.segments.len() - 1);
        let begin = if i == 0 { 0.0 } else { self.ends[i - 1] };
        let (from, edge) = &self.segments[i];
        let local = (s - begin).clamp(0.0, edge.length);
        if local >= edge.length {
            // end poses are stored exactly
            return edge.end_pose;
        }
        edge.pose_at(from, local)
    }
}

/// What the robot did during one tick of the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickKind {
    /// Task tick with a fresh decision to keep working.
    Continue,
    /// Task tick between two decisions.
    Hold,
    /// Driving to a station.
    Return,
    /// Driving from a station back to the task.
    Resume,
    /// Completing the task with no station reachable at all.
    Finish,
}

impl TickKind {
    pub fn name(&self) -> &'static str {
        match self {
            TickKind::Continue => "continue",
            TickKind::Hold => "hold",
            TickKind::Return => "return",
            TickKind::Resume => "resume",
            TickKind::Finish => "finish",
        }
    }
}

impl fmt::Display for TickKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// State at the start of a tick and the plan in force during it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub pose: Pose,
    pub battery: f64,
    pub kind: TickKind,
    pub station: usize,
    pub path_cost: f64,
    pub planner: Option<PlannerUsed>,
    /// Planning time spent in this tick.
    pub replan: Duration,
}

/// One station visit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub t: f64,
    pub station: usize,
    /// Battery when the return was decided.
    pub battery_at_decision: f64,
    pub path_cost: f64,
    /// Battery left on arrival, before recharging.
    pub battery_on_arrival: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MissionTrace {
    pub rows: Vec<TraceRow>,
    pub arrivals: Vec<Arrival>,
    /// Distance driven.
    pub distance: f64,
    /// Lowest battery level seen, including on arrival before recharging.
    pub min_battery: f64,
    /// Set once the whole task track has been driven.
    pub completed: bool,
}

impl MissionTrace {
    pub const CSV_HEADER: &'static str = "t,x,y,heading,battery,decision,station,path_cost,planner,replan_ms";

    pub fn returns(&self) -> usize {
        self.arrivals.len()
    }

    /// Ticks on which the robot made a fresh return decision that switched
    /// the target station.
    pub fn station_switches(&self) -> usize {
        let decided: Vec<&TraceRow> = self
            .rows
            .iter()
            .filter(|r| matches!(r.kind, TickKind::Continue | TickKind::Return))
            .collect();
        decided.windows(2).filter(|w| w[0].station != w[1].station).count()
    }

    pub fn total_replan_time(&self) -> Duration {
        self.rows.iter().map(|r| r.replan).sum()
    }

    /// Writes the trace as CSV. Planning times are written as 0 unless
    /// `timing` is set, so repeated runs give identical files.
    pub fn write_csv<W: Write>(&self, mut out: W, timing: bool) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            let ms = if timing { r.replan.as_secs_f64() * 1e3 } else { 0.0 };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                g9(r.t),
                g9(r.pose.x),
                g9(r.pose.y),
                g9(r.pose.heading()),
                g9(r.battery),
                r.kind,
                r.station,
                g9(r.path_cost),
                r.planner.map_or("none", |p| p.name()),
                g9(ms)
            )?;
        }
        Ok(())
    }
}

/// Mission aborted; `trace` holds everything up to the failure.
#[derive(Debug, Clone, Error)]
#[error("{error}")]
pub struct MissionFailure {
    pub error: EnergyError,
    pub trace: MissionTrace,
}

enum Phase {
    Task,
    Finishing,
    Returning { track: Track, s: f64, station: usize, battery_at_decision: f64 },
    Resuming { track: Track, s: f64 },
}

/// Runs the mission until the task track is complete.
///
/// One trace row is written per tick with the state before the move. The
/// robot moves `speed * dt` per tick (less on the last tick of a track) and
/// pays `k` per unit of arc length. On reaching a station it recharges to
/// capacity, plans an RRT* path back to where it left the task (or a little
/// earlier on the task track when that is cheaper) and, once
/// there, picks up the task heading again.
pub fn run_mission(
    mission: &mut MissionPlan,
    world: &WorldModel,
    robot: &RobotParams,
    eparams: &EnergyParams,
    pparams: &PlannerParams,
    seed: u64,
) -> Result<MissionTrace, MissionFailure> {
    let mut trace = MissionTrace::default();
    match drive(mission, world, robot, eparams, pparams, seed, &mut trace) {
        Ok(()) => Ok(trace),
        Err(error) => Err(MissionFailure { error, trace }),
    }
}

fn drive(
    mission: &mut MissionPlan,
    world: &WorldModel,
    robot: &RobotParams,
    eparams: &EnergyParams,
    pparams: &PlannerParams,
    seed: u64,
    trace: &mut MissionTrace,
) -> Result<(), EnergyError> {
    if let Err((field, msg)) = eparams.validate() {
        return Err(EnergyError::InvalidMission(format!("energy.{field}: {msg}")));
    }
    let task = Track::task(&mission.task_path, robot)?;
    let step = robot.speed() * eparams.dt;
    let mut state = RobotState {
        pose: task.pose_at(0.0),
        battery: eparams.battery_capacity,
        params: *robot,
    };
    trace.min_battery = state.battery;
    let mut phase = Phase::Task;
    let mut task_s = 0.0;
    let mut task_ticks = 0usize;
    let mut cached: Option<(PathRecord, PlannerUsed)> = None;
    let mut resume_attempt = 0u64;
    let mut planners = ArcPlanners {
        world,
        robot,
        params: pparams,
    };

    for tick in 0..MAX_TICKS {
        let t = tick as f64 * eparams.dt;
        let mut replan = Duration::ZERO;
        let on_task = matches!(phase, Phase::Task | Phase::Finishing);
        if on_task && task_s >= task.length() {
            trace.completed = true;
            return Ok(());
        }
        // decide what to do this tick
        let kind = match phase {
            Phase::Task if task_ticks.is_multiple_of(eparams.replan_period) => {
                let started = Instant::now();
                let decided = decide_return(&state, mission, eparams, &mut planners, mix_seed(&[seed, tick as u64]));
                replan = started.elapsed();
                match decided {
                    Ok(Decision {
                        kind: DecisionKind::Continue,
                        latest_path,
                        planner_used,
                        ..
                    }) => {
                        cached = Some((latest_path, planner_used));
                        TickKind::Continue
                    }
                    Ok(Decision {
                        kind: DecisionKind::Return { station },
                        latest_path,
                        planner_used,
                        ..
                    }) => {
                        phase = Phase::Returning {
                            track: Track::from_path(&latest_path, robot),
                            s: 0.0,
                            station,
                            battery_at_decision: state.battery,
                        };
                        cached = Some((latest_path, planner_used));
                        TickKind::Return
                    }
                    // No station is reachable (boxed in against a wall, or
                    // every path costs more than the battery): finish the
                    // task instead if the battery covers it.
                    Err(EnergyError::Stranded { battery, .. })
                        if world.k * (task.length() - task_s) <= battery + BATTERY_TOL =>
                    {
                        cached = None;
                        phase = Phase::Finishing;
                        TickKind::Finish
                    }
                    Err(e) => return Err(e),
                }
            }
            Phase::Task => TickKind::Hold,
            Phase::Finishing => TickKind::Finish,
            Phase::Returning { .. } => TickKind::Return,
            Phase::Resuming { .. } => TickKind::Resume,
        };
        push_row(trace, t, &state, kind, mission.target, &cached, replan);

        // move
        let moved = match &mut phase {
            Phase::Task | Phase::Finishing => {
                let next = (task_s + step).min(task.length());
                let d = next - task_s;
                task_s = next;
                task_ticks += 1;
                state.pose = task.pose_at(task_s);
                d
            }
            Phase::Returning { track, s, .. } | Phase::Resuming { track, s } => {
                let next = (*s + step).min(track.length());
                let d = next - *s;
                *s = next;
                state.pose = track.pose_at(*s);
                d
            }
        };
        state.battery -= world.k * moved;
        trace.distance += moved;
        trace.min_battery = trace.min_battery.min(state.battery);
        if state.battery < -BATTERY_TOL {
            return Err(EnergyError::BatteryDepleted {
                t: t + eparams.dt,
                battery: state.battery,
            });
        }

        // phase transitions at the end of a track
        match &phase {
            Phase::Returning {
                track,
                s,
                station,
                battery_at_decision,
            } if *s >= track.length() => {
                trace.arrivals.push(Arrival {
                    t: t + eparams.dt,
                    station: *station,
                    battery_at_decision: *battery_at_decision,
                    path_cost: cached.as_ref().map_or(f64::NAN, |(p, _)| p.cost()),
                    battery_on_arrival: state.battery,
                });
                state.battery = eparams.battery_capacity;
                // Rejoin the task at the interruption point or a little
                // before it, whichever is cheapest once the repeated stretch
                // of task is paid for. A few independent trees per candidate.
                let mut path: Option<(PathRecord, f64, f64)> = None;
                for j in 0..RESUME_CANDIDATES {
                    let s_back = task_s - j as f64 * RESUME_BACKOFF;
                    if s_back < 0.0 {
                        break;
                    }
                    let resume_to = task.pose_at(s_back).position();
                    for _ in 0..RESUME_ATTEMPTS {
                        let p = PlannerParams {
                            goal_tolerance: 1e-9,
                            ..pparams.with_seed(mix_seed(&[seed, u64::MAX, resume_attempt]))
                        };
                        resume_attempt += 1;
                        if let Some(found) = plan_rrt_star(state.pose, resume_to, world, robot, &p, None).path {
                            let total = found.cost() + world.k * (task_s - s_back);
                            if path.as_ref().is_none_or(|(_, best, _)| total < *best) {
                                path = Some((found, total, s_back));
                            }
                        }
                    }
                }
                let Some((path, _, s_back)) = path else {
                    return Err(EnergyError::Stranded {
                        battery: state.battery,
                        any_path: false,
                    });
                };
                task_s = s_back;
                phase = Phase::Resuming {
                    track: Track::from_path(&path, robot),
                    s: 0.0,
                };
                cached = Some((path, PlannerUsed::RrtStar));
            }
            Phase::Resuming { track, s } if *s >= track.length() => {
                // back on the task: same position, task heading restored
                state.pose = task.pose_at(task_s);
                phase = Phase::Task;
                task_ticks = 0;
            }
            _ => {}
        }
    }
    Err(EnergyError::TickLimit(MAX_TICKS))
}

fn push_row(
    trace: &mut MissionTrace,
    t: f64,
    state: &RobotState,
    kind: TickKind,
    station: usize,
    cached: &Option<(PathRecord, PlannerUsed)>,
    replan: Duration,
) {
    trace.rows.push(TraceRow {
        t,
        pose: state.pose,
        battery: state.battery,
        kind,
        station,
        path_cost: cached.as_ref().map_or(f64::NAN, |(p, _)| p.cost()),
        planner: cached.as_ref().map(|(_, u)| *u),
        replan,
    });
}
