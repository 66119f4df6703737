//! JSON scenario files.
//!
//! Every section is optional except `world.min`/`world.max`; absent fields
//! take the library defaults. Angles are degrees in the file and radians in
//! memory. A file may carry named `variants`, each a partial config that is
//! deep-merged over the base document before parsing.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::bench::{Scenario, Trajectory};
use crate::energy::{EnergyParams, MissionPlan};
use crate::geom::{Point, Pose, RobotParams, Segment, WorldModel, DEFAULT_COLLISION_RESOLUTION};
use crate::planners::{Algorithm, PlannerParams};
use crate::tree::Forest;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::Validation {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    world: RawWorld,
    #[serde(default)]
    robot: RawRobot,
    #[serde(default)]
    planner: RawPlanner,
    #[serde(default)]
    energy: RawEnergy,
    #[serde(default = "default_forest_capacity")]
    forest_capacity: usize,
    start: Option<RawPose>,
    goal: Option<[f64; 2]>,
    #[serde(default)]
    stations: Vec<[f64; 2]>,
    #[serde(default)]
    task_path: Vec<[f64; 2]>,
    #[serde(default = "default_seeds")]
    seeds: Vec<u64>,
    #[serde(default)]
    trajectory: RawTrajectory,
    #[serde(default = "default_algorithms")]
    algorithms: Vec<String>,
    #[serde(default = "default_p_scan_values")]
    p_scan_values: Vec<f64>,
    /// Only read before parsing; kept here so the key is accepted.
    #[serde(default)]
    #[allow(dead_code)]
    variants: BTreeMap<String, Value>,
}

fn default_forest_capacity() -> usize {
    Forest::DEFAULT_CAPACITY
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_algorithms() -> Vec<String> {
    Algorithm::ALL.iter().map(|a| a.name().to_string()).collect()
}

fn default_p_scan_values() -> Vec<f64> {
    vec![0.0, 0.3, 0.7, 0.9]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorld {
    min: [f64; 2],
    max: [f64; 2],
    #[serde(default)]
    obstacles: Vec<[f64; 4]>,
    #[serde(default = "one")]
    k: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawRobot {
    speed: f64,
    wheelbase: f64,
    /// Degrees.
    max_steer: f64,
}

impl Default for RawRobot {
    fn default() -> Self {
        let r = RobotParams::default();
        Self {
            speed: r.speed(),
            wheelbase: r.wheelbase(),
            max_steer: r.max_steer().to_degrees(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPlanner {
    step: f64,
    neighbor_radius: f64,
    p_goal: f64,
    p_scan: f64,
    p_waypoint: f64,
    max_nodes: usize,
    goal_tolerance: f64,
    collision_resolution: f64,
}

impl Default for RawPlanner {
    fn default() -> Self {
        let p = PlannerParams::default();
        Self {
            step: p.step,
            neighbor_radius: p.neighbor_radius,
            p_goal: p.p_goal,
            p_scan: p.p_scan,
            p_waypoint: p.p_waypoint,
            max_nodes: p.max_nodes,
            goal_tolerance: p.goal_tolerance,
            collision_resolution: DEFAULT_COLLISION_RESOLUTION,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawEnergy {
    safety_factor: f64,
    replan_period: usize,
    battery_capacity: f64,
    dt: f64,
}

impl Default for RawEnergy {
    fn default() -> Self {
        let e = EnergyParams::default();
        Self {
            safety_factor: e.safety_factor,
            replan_period: e.replan_period,
            battery_capacity: e.battery_capacity,
            dt: e.dt,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPose {
    x: f64,
    y: f64,
    /// Degrees.
    heading: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawTrajectory {
    x: f64,
    y_start: f64,
    y_end: f64,
    y_step: f64,
    /// Degrees.
    heading: f64,
}

impl Default for RawTrajectory {
    fn default() -> Self {
        Self {
            x: 3.0,
            y_start: 0.0,
            y_end: 3.0,
            y_step: 0.25,
            heading: 90.0,
        }
    }
}

/// A validated scenario file.
#[derive(Debug, Clone)]
pub struct Config {
    pub world: WorldModel,
    pub robot: RobotParams,
    pub planner: PlannerParams,
    pub energy: EnergyParams,
    pub forest_capacity: usize,
    pub start: Option<Pose>,
    pub goal: Option<Point>,
    pub stations: Vec<Point>,
    pub task_path: Vec<Point>,
    pub seeds: Vec<u64>,
    pub trajectory: Trajectory,
    pub algorithms: Vec<Algorithm>,
    pub p_scan_values: Vec<f64>,
    /// Names of the variants the file declares.
    pub variants: Vec<String>,
}

/// Reads and validates a config file, applying `variant` if given.
pub fn load_config(path: impl AsRef<Path>, variant: Option<&str>) -> Result<Config, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text, variant)
}

pub fn parse_config(text: &str, variant: Option<&str>) -> Result<Config, ConfigError> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let variants: Vec<String> = match doc.get("variants") {
        None => Vec::new(),
        Some(Value::Object(m)) => m.keys().cloned().collect(),
        Some(_) => return Err(ConfigError::Parse("`variants` must be an object".into())),
    };
    if let Some(name) = variant {
        let patch = doc
            .get("variants")
            .and_then(|v| v.get(name))
            .cloned()
            .ok_or_else(|| invalid("variants", format!("no variant named `{name}`")))?;
        if !patch.is_object() {
            return Err(ConfigError::Parse(format!("variant `{name}` must be an object")));
        }
        deep_merge(&mut doc, patch);
    }
    let raw: RawConfig = serde_json::from_value(doc).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut cfg = validate(raw)?;
    cfg.variants = variants;
    Ok(cfg)
}

/// Objects merge key by key; anything else in `patch` replaces `base`.
pub fn deep_merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn point(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

fn check_finite(field: &str, values: &[f64]) -> Result<(), ConfigError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(field, "values must be finite"))
    }
}

fn validate(raw: RawConfig) -> Result<Config, ConfigError> {
    // world
    let w = &raw.world;
    check_finite("world.min", &w.min)?;
    check_finite("world.max", &w.max)?;
    if !(w.max[0] > w.min[0] && w.max[1] > w.min[1]) {
        return Err(invalid("world.max", "must exceed world.min in both coordinates"));
    }
    if !(w.k > 0.0 && w.k.is_finite()) {
        return Err(invalid("world.k", format!("must be positive, got {}", w.k)));
    }
    let mut obstacles = Vec::with_capacity(w.obstacles.len());
    for (i, o) in w.obstacles.iter().enumerate() {
        check_finite(&format!("world.obstacles[{i}]"), o)?;
        let seg = Segment::new(Point::new(o[0], o[1]), Point::new(o[2], o[3]));
        if seg.is_degenerate() {
            return Err(invalid(format!("world.obstacles[{i}]"), "segment has zero length"));
        }
        obstacles.push(seg);
    }
    let res = raw.planner.collision_resolution;
    if !(res > 0.0 && res.is_finite()) {
        return Err(invalid("planner.collision_resolution", format!("must be positive, got {res}")));
    }
    let mut world = WorldModel::new(point(w.min), point(w.max))
        .with_obstacles(obstacles)
        .with_gain(w.k);
    world.collision_resolution = res;

    // robot
    let r = &raw.robot;
    let robot = RobotParams::new(r.speed, r.wheelbase, r.max_steer.to_radians()).map_err(|e| match e {
        crate::geom::GeomError::InvalidParams { field, reason } => invalid(format!("robot.{field}"), reason),
        other => invalid("robot", other),
    })?;

    // planner
    let p = &raw.planner;
    let planner = PlannerParams {
        step: p.step,
        neighbor_radius: p.neighbor_radius,
        p_goal: p.p_goal,
        p_scan: p.p_scan,
        p_waypoint: p.p_waypoint,
        max_nodes: p.max_nodes,
        goal_tolerance: p.goal_tolerance,
        rng_seed: 0,
    };
    planner
        .validate()
        .map_err(|(field, msg)| invalid(format!("planner.{field}"), msg))?;

    // energy
    let e = &raw.energy;
    let energy = EnergyParams {
        safety_factor: e.safety_factor,
        replan_period: e.replan_period,
        battery_capacity: e.battery_capacity,
        dt: e.dt,
    };
    energy
        .validate()
        .map_err(|(field, msg)| invalid(format!("energy.{field}"), msg))?;

    if raw.forest_capacity < 1 {
        return Err(invalid("forest_capacity", "must be at least 1"));
    }

    let inside = |field: String, p: Point| -> Result<Point, ConfigError> {
        if p.x.is_finite() && p.y.is_finite() && world.contains(p) {
            Ok(p)
        } else {
            Err(invalid(field, format!("({}, {}) lies outside the workspace", p.x, p.y)))
        }
    };
    let start = match &raw.start {
        Some(s) => {
            inside("start".into(), Point::new(s.x, s.y))?;
            if !s.heading.is_finite() {
                return Err(invalid("start.heading", "must be finite"));
            }
            Some(Pose::new(s.x, s.y, s.heading.to_radians()))
        }
        None => None,
    };
    let goal = raw.goal.map(|g| inside("goal".into(), point(g))).transpose()?;
    let stations = raw
        .stations
        .iter()
        .enumerate()
        .map(|(i, s)| inside(format!("stations[{i}]"), point(*s)))
        .collect::<Result<Vec<_>, _>>()?;
    let task_path = raw
        .task_path
        .iter()
        .enumerate()
        .map(|(i, s)| inside(format!("task_path[{i}]"), point(*s)))
        .collect::<Result<Vec<_>, _>>()?;

    if raw.seeds.is_empty() {
        return Err(invalid("seeds", "at least one seed is required"));
    }

    let t = &raw.trajectory;
    check_finite("trajectory", &[t.x, t.y_start, t.y_end, t.y_step, t.heading])?;
    if !(t.y_step > 0.0) {
        return Err(invalid("trajectory.y_step", format!("must be positive, got {}", t.y_step)));
    }
    if t.y_end < t.y_start {
        return Err(invalid("trajectory.y_end", "must not be below y_start"));
    }
    let trajectory = Trajectory {
        x: t.x,
        y_start: t.y_start,
        y_end: t.y_end,
        y_step: t.y_step,
        heading: t.heading.to_radians(),
    };
    for (i, pose) in trajectory.poses().iter().enumerate() {
        inside(format!("trajectory (pose {i})"), pose.position())?;
    }

    let algorithms = raw
        .algorithms
        .iter()
        .enumerate()
        .map(|(i, a)| Algorithm::parse(a).ok_or_else(|| invalid(format!("algorithms[{i}]"), format!("unknown algorithm `{a}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if algorithms.is_empty() {
        return Err(invalid("algorithms", "at least one algorithm is required"));
    }
    for (i, &v) in raw.p_scan_values.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(format!("p_scan_values[{i}]"), format!("probability must lie in [0, 1], got {v}")));
        }
    }

    Ok(Config {
        world,
        robot,
        planner,
        energy,
        forest_capacity: raw.forest_capacity,
        start,
        goal,
        stations,
        task_path,
        seeds: raw.seeds,
        trajectory,
        algorithms,
        p_scan_values: raw.p_scan_values,
        variants: Vec::new(),
    })
}

impl Config {
    /// Benchmark scenario; needs a goal.
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let goal = self.goal.ok_or_else(|| invalid("goal", "required for benchmarks"))?;
        Ok(Scenario {
            world: self.world.clone(),
            robot: self.robot,
            params: self.planner,
            forest_capacity: self.forest_capacity,
            goal,
            trajectory: self.trajectory,
            algorithms: self.algorithms.clone(),
            seeds: self.seeds.clone(),
            p_scan_values: self.p_scan_values.clone(),
        })
    }

    /// Mission plan; needs a task path and at least one station.
    pub fn mission_plan(&self) -> Result<MissionPlan, ConfigError> {
        if self.task_path.len() < 2 {
            return Err(invalid("task_path", "needs at least two waypoints"));
        }
        if self.stations.is_empty() {
            return Err(invalid("stations", "at least one station is required"));
        }
        MissionPlan::new(self.task_path.clone(), self.stations.clone(), self.forest_capacity)
            .map_err(|e| invalid("task_path", e))
    }
}
