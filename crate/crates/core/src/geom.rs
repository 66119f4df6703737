//! Arc kinematics for a constant-speed car, steering limits, energy cost and
//! segment-based collision checks.

use std::f64::consts::PI;

use thiserror::Error;

/// Below this |alpha| (rad) an edge is treated as a straight line.
pub const STRAIGHT_EPS: f64 = 1e-9;
/// Targets closer than this to the start position are degenerate.
pub const DEGENERATE_EPS: f64 = 1e-12;
/// Slack on `|omega| <= omega_max` absorbing round-off on clamped arcs.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Default polyline spacing used when checking arcs against obstacles.
pub const DEFAULT_COLLISION_RESOLUTION: f64 = 0.01;

const BACKWARD_LIMIT: f64 = PI / 2.0 + 1e-9;
const BOUNDS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("target coincides with the start position")]
    DegenerateTarget,
    #[error("target lies behind the heading (alpha = {alpha} rad)")]
    BackwardTarget { alpha: f64 },
    #[error("invalid robot parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Planar position plus heading. The heading is always kept in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn set_heading(&mut self, heading: f64) {
        self.heading = normalize_angle(heading);
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Kinematic car parameters. `omega_max` is derived and kept in sync.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    speed: f64,
    wheelbase: f64,
    max_steer: f64,
    omega_max: f64,
}

impl RobotParams {
    pub fn new(speed: f64, wheelbase: f64, max_steer: f64) -> Result<Self, GeomError> {
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(GeomError::InvalidParams {
                field: "speed",
                reason: format!("must be positive, got {speed}"),
            });
        }
        if !(wheelbase > 0.0 && wheelbase.is_finite()) {
            return Err(GeomError::InvalidParams {
                field: "wheelbase",
                reason: format!("must be positive, got {wheelbase}"),
            });
        }
        if !(max_steer > 0.0 && max_steer < PI / 2.0) {
            return Err(GeomError::InvalidParams {
                field: "max_steer",
                reason: format!("must lie in (0, 90) degrees, got {:.6}", max_steer.to_degrees()),
            });
        }
        Ok(Self {
            speed,
            wheelbase,
            max_steer,
            omega_max: speed / wheelbase * max_steer.tan(),
        })
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn wheelbase(&self) -> f64 {
        self.wheelbase
    }

    pub fn max_steer(&self) -> f64 {
        self.max_steer
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    /// Radius of the tightest turn, `v / omega_max`.
    pub fn min_turn_radius(&self) -> f64 {
        self.speed / self.omega_max
    }

    pub fn with_speed(self, speed: f64) -> Result<Self, GeomError> {
        Self::new(speed, self.wheelbase, self.max_steer)
    }

    pub fn with_wheelbase(self, wheelbase: f64) -> Result<Self, GeomError> {
        Self::new(self.speed, wheelbase, self.max_steer)
    }

    pub fn with_max_steer(self, max_steer: f64) -> Result<Self, GeomError> {
        Self::new(self.speed, self.wheelbase, max_steer)
    }
}

impl Default for RobotParams {
    /// v = 1, L = 0.5, 40 degree steering limit.
    fn default() -> Self {
        Self::new(1.0, 0.5, 40f64.to_radians()).expect("default robot parameters are valid")
    }
}

/// Circular arc leaving a pose tangent to its heading.
///
/// Signs follow the turn direction: positive `alpha`, `turn` and `omega` mean
/// a counter-clockwise (left) turn. `radius` is infinite for straight edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcEdge {
    pub alpha: f64,
    pub chord: f64,
    pub radius: f64,
    pub turn: f64,
    pub omega: f64,
    /// Signed curvature, `omega / v`.
    pub curvature: f64,
    /// Arc length actually traveled.
    pub length: f64,
    pub energy: f64,
    pub end_pose: Pose,
}

impl ArcEdge {
    pub fn is_straight(&self) -> bool {
        self.curvature == 0.0
    }

    /// Pose after traveling `s` along this edge starting from `from`.
    pub fn pose_at(&self, from: &Pose, s: f64) -> Pose {
        advance_with_curvature(from, self.curvature, s)
    }
}

/// Constant-curvature motion: travel arc length `s` from `from` along a
/// circle of signed curvature `curvature` (zero for a straight line).
pub fn advance_with_curvature(from: &Pose, curvature: f64, s: f64) -> Pose {
    let psi = from.heading();
    if curvature == 0.0 {
        return Pose::new(from.x + s * psi.cos(), from.y + s * psi.sin(), psi);
    }
    let r = 1.0 / curvature;
    let psi_end = psi + curvature * s;
    // Signed-radius form: the centre sits at from + r * (-sin psi, cos psi).
    let x = from.x + r * (psi_end.sin() - psi.sin());
    let y = from.y - r * (psi_end.cos() - psi.cos());
    Pose::new(x, y, psi_end)
}

/// The unique arc leaving `from` tangent to its heading and ending at `to`.
pub fn arc_between(from: &Pose, to: Point, robot: &RobotParams, k: f64) -> Result<ArcEdge, GeomError> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let chord = dx.hypot(dy);
    if chord <= DEGENERATE_EPS {
        return Err(GeomError::DegenerateTarget);
    }
    let alpha = normalize_angle(dy.atan2(dx) - from.heading());
    if alpha.abs() >= BACKWARD_LIMIT {
        return Err(GeomError::BackwardTarget { alpha });
    }

    let (radius, curvature, turn, length) = if alpha.abs() <= STRAIGHT_EPS {
        (f64::INFINITY, 0.0, 0.0, chord)
    } else {
        let sin_a = alpha.sin();
        let radius = chord / (2.0 * sin_a.abs());
        let turn = 2.0 * alpha;
        (radius, 2.0 * sin_a / chord, turn, radius * turn.abs())
    };

    Ok(ArcEdge {
        alpha,
        chord,
        radius,
        turn,
        omega: robot.speed() * curvature,
        curvature,
        length,
        energy: k * length,
        end_pose: Pose::new(to.x, to.y, from.heading() + turn),
    })
}

pub fn is_feasible(edge: &ArcEdge, robot: &RobotParams) -> bool {
    edge.omega.abs() <= robot.omega_max() + FEASIBILITY_TOL
}

/// Edge of length `arc_len` turning at the maximum rate in direction
/// `turn_sign` (its sign only; zero gives a straight edge).
pub fn max_rate_arc(from: &Pose, turn_sign: f64, robot: &RobotParams, arc_len: f64, k: f64) -> ArcEdge {
    let curvature = if turn_sign == 0.0 {
        0.0
    } else {
        turn_sign.signum() / robot.min_turn_radius()
    };
    let end_pose = advance_with_curvature(from, curvature, arc_len);
    let turn = curvature * arc_len;
    let alpha = turn / 2.0;
    let radius = if curvature == 0.0 {
        f64::INFINITY
    } else {
        1.0 / curvature.abs()
    };
    ArcEdge {
        alpha,
        chord: from.position().distance(&end_pose.position()),
        radius,
        turn,
        omega: robot.speed() * curvature,
        curvature,
        length: arc_len,
        energy: k * arc_len,
        end_pose,
    }
}

/// Pose reached by driving `arc_len` at `sign(omega) * omega_max`, where
/// `omega` is the rate the unconstrained arc from `from` to `to` would need.
pub fn clamp_steer(from: &Pose, to: Point, robot: &RobotParams, arc_len: f64) -> Pose {
    let alpha = normalize_angle((to.y - from.y).atan2(to.x - from.x) - from.heading());
    max_rate_arc(from, alpha, robot, arc_len, 0.0).end_pose
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub p1: Point,
    pub p2: Point,
}

impl Segment {
    pub const fn new(p1: Point, p2: Point) -> Self {
        Self { p1, p2 }
    }

    pub fn is_degenerate(&self) -> bool {
        self.p1 == self.p2
    }
}

fn orientation(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

// `p` is assumed collinear with `s`.
fn within_box(s: &Segment, p: Point) -> bool {
    p.x >= s.p1.x.min(s.p2.x) && p.x <= s.p1.x.max(s.p2.x) && p.y >= s.p1.y.min(s.p2.y) && p.y <= s.p1.y.max(s.p2.y)
}

/// Closed-segment intersection. Touching endpoints and collinear overlap
/// both count.
pub fn segments_intersect(a: &Segment, b: &Segment) -> bool {
    let o1 = orientation(a.p1, a.p2, b.p1);
    let o2 = orientation(a.p1, a.p2, b.p2);
    let o3 = orientation(b.p1, b.p2, a.p1);
    let o4 = orientation(b.p1, b.p2, a.p2);

    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && within_box(a, b.p1))
        || (o2 == 0.0 && within_box(a, b.p2))
        || (o3 == 0.0 && within_box(b, a.p1))
        || (o4 == 0.0 && within_box(b, a.p2))
}

/// Rectangular workspace with line-segment obstacles and the
/// distance-to-energy gain `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel {
    pub min: Point,
    pub max: Point,
    pub obstacles: Vec<Segment>,
    pub k: f64,
    pub collision_resolution: f64,
}

impl WorldModel {
    pub fn new(min: Point, max: Point) -> Self {
        Self {
            min,
            max,
            obstacles: Vec::new(),
            k: 1.0,
            collision_resolution: DEFAULT_COLLISION_RESOLUTION,
        }
    }

    pub fn with_obstacles(mut self, obstacles: Vec<Segment>) -> Self {
        self.obstacles = obstacles;
        self
    }

    pub fn with_gain(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    /// Closed-rectangle containment.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x - BOUNDS_TOL
            && p.x <= self.max.x + BOUNDS_TOL
            && p.y >= self.min.y - BOUNDS_TOL
            && p.y <= self.max.y + BOUNDS_TOL
    }

    pub fn segment_blocked(&self, seg: &Segment) -> bool {
        self.obstacles.iter().any(|obs| segments_intersect(seg, obs))
    }
}

/// Points along the edge with chordal spacing at most `resolution`,
/// starting at `from` and ending exactly at the edge's end pose.
pub fn discretize(edge: &ArcEdge, from: &Pose, resolution: f64) -> Vec<Point> {
    let pieces = ((edge.length / resolution).ceil() as usize).max(1);
    let mut pts = Vec::with_capacity(pieces + 1);
    pts.push(from.position());
    for i in 1..pieces {
        let s = edge.length * i as f64 / pieces as f64;
        pts.push(edge.pose_at(from, s).position());
    }
    pts.push(edge.end_pose.position());
    pts
}

/// True if the discretized arc leaves the workspace or touches an obstacle.
pub fn edge_collides(edge: &ArcEdge, from: &Pose, world: &WorldModel) -> bool {
    let pts = discretize(edge, from, world.collision_resolution);
    if pts.iter().any(|p| !world.contains(*p)) {
        return true;
    }
    if world.obstacles.is_empty() {
        return false;
    }
    pts.windows(2)
        .any(|w| world.segment_blocked(&Segment::new(w[0], w[1])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    fn robot_v1() -> RobotParams {
        RobotParams::default()
    }

    /// Forward-Euler-free reference: integrates the unicycle with a
    /// midpoint heading rule at a fixed step.
    fn integrate_constant_rate(from: &Pose, omega: f64, v: f64, arc_len: f64, step: f64) -> Pose {
        let n = (arc_len / (v * step)).round() as usize;
        let dt = arc_len / v / n as f64;
        let (mut x, mut y, mut psi) = (from.x, from.y, from.heading());
        for _ in 0..n {
            let mid = psi + 0.5 * omega * dt;
            x += v * mid.cos() * dt;
            y += v * mid.sin() * dt;
            psi += omega * dt;
        }
        Pose::new(x, y, psi)
    }

    #[test]
    fn normalize_keeps_half_open_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((normalize_angle(-7.0 * PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn robot_params_validation() {
        assert!(RobotParams::new(0.0, 0.5, 0.5).is_err());
        assert!(RobotParams::new(1.0, -1.0, 0.5).is_err());
        assert!(RobotParams::new(1.0, 0.5, PI / 2.0).is_err());
        let r = RobotParams::default();
        assert!((r.omega_max() - 2.0 * 40f64.to_radians().tan()).abs() < 1e-15);
        let faster = r.with_speed(2.0).unwrap();
        assert!((faster.omega_max() - 2.0 * r.omega_max()).abs() < 1e-12);
    }

    #[test]
    fn arc_aligned_target_is_straight() {
        let e = arc_between(&Pose::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0), &robot_v1(), 1.0).unwrap();
        assert!(e.is_straight());
        assert_eq!(e.alpha, 0.0);
        assert!(e.radius.is_infinite());
        assert!((e.length - 1.0).abs() < TOL);
        assert_eq!(e.omega, 0.0);
        assert!((e.energy - 1.0).abs() < TOL);
    }

    #[test]
    fn arc_half_circle_boundary() {
        // alpha magnitude pi/2: R = 1 / (2 sin(pi/2)) = 0.5, length = 0.5 * pi.
        let e = arc_between(&Pose::new(0.0, 0.0, PI / 2.0), Point::new(1.0, 0.0), &robot_v1(), 1.0).unwrap();
        assert!((e.alpha.abs() - PI / 2.0).abs() < TOL);
        assert!((e.radius - 0.5).abs() < TOL);
        assert!((e.turn.abs() - PI).abs() < TOL);
        assert!((e.length - 0.5 * PI).abs() < TOL);
        assert!((e.omega.abs() - 2.0).abs() < TOL);
        assert!((e.energy - PI / 2.0).abs() < TOL);
        // right turn
        assert!(e.omega < 0.0 && e.turn < 0.0);
    }

    #[test]
    fn arc_thirty_degree_case() {
        let e = arc_between(&Pose::new(0.0, 0.0, PI / 6.0), Point::new(1.0, 0.0), &robot_v1(), 1.0).unwrap();
        assert!((e.alpha.abs() - PI / 6.0).abs() < TOL);
        assert!((e.radius - 1.0).abs() < TOL);
        assert!((e.turn.abs() - PI / 3.0).abs() < TOL);
        assert!((e.length - PI / 3.0).abs() < TOL);
        assert!((e.omega.abs() - 1.0).abs() < TOL);
        assert!((e.energy - 1.047_197_551_196_597_6).abs() < TOL);
        assert!((e.end_pose.heading() - (-PI / 6.0)).abs() < TOL);
    }

    #[test]
    fn arc_errors() {
        let p = Pose::new(0.0, 0.0, 0.0);
        assert_eq!(
            arc_between(&p, Point::new(0.0, 0.0), &robot_v1(), 1.0),
            Err(GeomError::DegenerateTarget)
        );
        assert!(matches!(
            arc_between(&p, Point::new(-1.0, 0.1), &robot_v1(), 1.0),
            Err(GeomError::BackwardTarget { .. })
        ));
    }

    #[test]
    fn feasibility_limit() {
        let robot = robot_v1();
        assert!((robot.omega_max() - 1.678_199_262_537_784).abs() < 1e-9);
        let p = Pose::new(0.0, 0.0, PI / 2.0);
        let fast = arc_between(&p, Point::new(1.0, 0.0), &robot, 1.0).unwrap();
        assert!(!is_feasible(&fast, &robot));
        let slow = arc_between(&Pose::new(0.0, 0.0, PI / 6.0), Point::new(1.0, 0.0), &robot, 1.0).unwrap();
        assert!(is_feasible(&slow, &robot));
        let straight = arc_between(&Pose::new(0.0, 0.0, 0.0), Point::new(5.0, 0.0), &robot, 1.0).unwrap();
        assert!(is_feasible(&straight, &RobotParams::new(1.0, 10.0, 0.01).unwrap()));
    }

    #[test]
    fn clamp_matches_numerical_integration() {
        let robot = robot_v1();
        let from = Pose::new(0.0, 0.0, PI / 2.0);
        let out = clamp_steer(&from, Point::new(1.0, 0.0), &robot, 1.0);
        assert!((out.heading() - (PI / 2.0 - robot.omega_max())).abs() < 1e-12);
        let reference = integrate_constant_rate(&from, -robot.omega_max(), 1.0, 1.0, 1e-4);
        assert!(out.position().distance(&reference.position()) < 1e-6);
        // radius sanity: v / omega_max
        assert!((robot.min_turn_radius() - 0.595_876).abs() < 1e-6);
    }

    #[test]
    fn clamp_with_near_right_angle_steering() {
        // 89.9 degrees gives omega_max ~ 1146 and a turning radius ~ 8.7e-4:
        // the clamped motion is a tight circle, never farther than arc_len.
        let robot = RobotParams::new(1.0, 0.5, 89.9f64.to_radians()).unwrap();
        let from = Pose::new(0.0, 0.0, 0.0);
        let out = clamp_steer(&from, Point::new(0.0, 1.0), &robot, 0.01);
        let reference = integrate_constant_rate(&from, robot.omega_max(), 1.0, 0.01, 1e-7);
        assert!(out.position().distance(&reference.position()) < 1e-6);
        assert!(out.position().distance(&from.position()) <= 2.0 * robot.min_turn_radius() + 1e-12);
        // Short of a quarter turn the endpoint still moves along the heading.
        let short = clamp_steer(&from, Point::new(1.0, 1.0), &robot, 1e-6);
        assert!((short.x - 1e-6).abs() < 1e-9 && short.y >= 0.0);
    }

    #[test]
    fn clamp_full_circle_returns_home() {
        let robot = robot_v1();
        let from = Pose::new(1.0, 2.0, 0.3);
        let out = clamp_steer(&from, Point::new(1.0, 5.0), &robot, 2.0 * PI * robot.min_turn_radius());
        assert!(out.position().distance(&from.position()) < 1e-12);
        assert!(normalize_angle(out.heading() - from.heading()).abs() < 1e-12);
    }

    #[test]
    fn segment_cases() {
        let s = |a: (f64, f64), b: (f64, f64)| Segment::new(Point::new(a.0, a.1), Point::new(b.0, b.1));
        assert!(segments_intersect(&s((0.0, 0.0), (1.0, 1.0)), &s((0.0, 1.0), (1.0, 0.0))));
        assert!(!segments_intersect(&s((0.0, 0.0), (1.0, 0.0)), &s((0.0, 1.0), (1.0, 1.0))));
        assert!(segments_intersect(&s((0.0, 0.0), (1.0, 0.0)), &s((1.0, 0.0), (2.0, 0.0))));
        assert!(segments_intersect(&s((0.0, 0.0), (2.0, 0.0)), &s((1.0, 0.0), (3.0, 0.0))));
        assert!(!segments_intersect(&s((0.0, 0.0), (1.0, 0.0)), &s((2.0, 0.0), (3.0, 0.0))));
        // T-junction
        assert!(segments_intersect(&s((0.0, 0.0), (2.0, 0.0)), &s((1.0, 0.0), (1.0, 1.0))));
    }

    fn empty_world() -> WorldModel {
        WorldModel::new(Point::new(-5.0, -5.0), Point::new(5.0, 5.0))
    }

    #[test]
    fn edge_collision_cases() {
        let robot = robot_v1();
        let from = Pose::new(0.0, 0.0, 0.0);
        let e = arc_between(&from, Point::new(1.0, 0.0), &robot, 1.0).unwrap();
        let wall = Segment::new(Point::new(0.5, -1.0), Point::new(0.5, 1.0));
        assert!(edge_collides(&e, &from, &empty_world().with_obstacles(vec![wall])));
        assert!(!edge_collides(&e, &from, &empty_world()));

        // The semicircle bulges to y = 0.5 at x = 0.5; the chord stays at y = 0.
        let from = Pose::new(0.0, 0.0, PI / 2.0);
        let semi = arc_between(&from, Point::new(1.0, 0.0), &robot, 1.0).unwrap();
        let stub = Segment::new(Point::new(0.5, 0.4), Point::new(0.5, 1.0));
        let chord = Segment::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0));
        assert!(!segments_intersect(&chord, &stub));
        assert!(edge_collides(&semi, &from, &empty_world().with_obstacles(vec![stub])));
    }

    #[test]
    fn edge_leaving_workspace_collides() {
        let world = WorldModel::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        let from = Pose::new(0.5, 0.5, 0.0);
        let e = arc_between(&from, Point::new(1.5, 0.5), &robot_v1(), 1.0).unwrap();
        assert!(edge_collides(&e, &from, &world));
        // starting on the boundary and moving inwards is fine
        let from = Pose::new(0.5, 0.0, PI / 2.0);
        let e = arc_between(&from, Point::new(0.5, 0.5), &robot_v1(), 1.0).unwrap();
        assert!(!edge_collides(&e, &from, &world));
    }

    #[test]
    fn discretization_spacing() {
        let from = Pose::new(0.0, 0.0, PI / 2.0);
        let e = arc_between(&from, Point::new(1.0, 0.0), &robot_v1(), 1.0).unwrap();
        let pts = discretize(&e, &from, 0.01);
        assert!(pts.windows(2).all(|w| w[0].distance(&w[1]) <= 0.01 + 1e-12));
        let apex = pts.iter().map(|p| p.y).fold(f64::MIN, f64::max);
        assert!((apex - 0.5).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn arc_properties(
            x in -3.0f64..3.0, y in -3.0f64..3.0, psi in -PI..PI,
            tx in -3.0f64..3.0, ty in -3.0f64..3.0, k in 0.1f64..5.0,
        ) {
            let from = Pose::new(x, y, psi);
            let to = Point::new(tx, ty);
            let robot = robot_v1();
            if let Ok(e) = arc_between(&from, to, &robot, k) {
                // arc never shorter than chord; equal only when straight
                prop_assert!(e.length >= e.chord - 1e-9);
                if e.alpha.abs() > 1e-6 {
                    prop_assert!(e.length > e.chord);
                }
                // end pose lands on the target
                prop_assert!(e.end_pose.position().distance(&to) < 1e-9);
                // integrating along the arc reproduces the target
                let end = e.pose_at(&from, e.length);
                prop_assert!(end.position().distance(&to) < 1e-9 * (1.0 + e.length));
                prop_assert!(normalize_angle(end.heading() - e.end_pose.heading()).abs() < 1e-9);
                // energy is linear in the gain
                let doubled = arc_between(&from, to, &robot, 2.0 * k).unwrap();
                prop_assert!((doubled.energy - 2.0 * e.energy).abs() <= 1e-12 * e.energy.max(1.0));
                // reversed heading at the end sees the start at -alpha
                let back = Pose::new(to.x, to.y, e.end_pose.heading() + PI);
                let alpha_back = normalize_angle((from.y - to.y).atan2(from.x - to.x) - back.heading());
                prop_assert!(normalize_angle(alpha_back + e.alpha).abs() < 1e-8);
            }
        }

        #[test]
        fn clamp_matches_integrator(
            psi in -PI..PI, tx in -2.0f64..2.0, ty in -2.0f64..2.0, len in 0.01f64..1.5,
        ) {
            let robot = robot_v1();
            let from = Pose::new(0.0, 0.0, psi);
            let to = Point::new(tx, ty);
            prop_assume!(to.distance(&from.position()) > 1e-3);
            let alpha = normalize_angle(ty.atan2(tx) - psi);
            prop_assume!(alpha.abs() > 1e-6);
            let out = clamp_steer(&from, to, &robot, len);
            let reference = integrate_constant_rate(&from, alpha.signum() * robot.omega_max(), 1.0, len, 1e-4);
            prop_assert!(out.position().distance(&reference.position()) < 1e-6);
        }

        #[test]
        fn intersection_is_symmetric(
            a in prop::array::uniform4(-2i32..3), b in prop::array::uniform4(-2i32..3),
        ) {
            let s1 = Segment::new(Point::new(a[0] as f64, a[1] as f64), Point::new(a[2] as f64, a[3] as f64));
            let s2 = Segment::new(Point::new(b[0] as f64, b[1] as f64), Point::new(b[2] as f64, b[3] as f64));
            prop_assert_eq!(segments_intersect(&s1, &s2), segments_intersect(&s2, &s1));
        }
    }
}
