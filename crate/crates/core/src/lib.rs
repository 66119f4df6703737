//! Sampling-based planners for a constant-speed car with a bounded turn rate.
//!
//! Besides the RRT, RRT* and ERRT baselines, [`planners::plan_dynamic`] warm
//! starts each search from a [`tree::Forest`] of recently found paths, and
//! [`energy`] wraps it in a return-to-base policy that keeps a charging
//! station reachable while the robot follows its task path.

pub mod bench;
pub mod config;
pub mod energy;
pub mod geom;
pub mod numfmt;
pub mod planners;
pub mod tree;

pub use geom::{ArcEdge, Point, Pose, RobotParams, Segment, WorldModel};
pub use planners::{PlanResult, PlanStatus, PlannerParams};
pub use tree::{Forest, PathRecord, Tree};
