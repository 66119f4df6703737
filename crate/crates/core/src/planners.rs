//! RRT, RRT*, ERRT and the forest-reusing dynamic planner.
//!
//! Every run owns two seeded ChaCha streams. The primary stream drives
//! spatial sampling and the goal-bias draw; the coin stream drives the scan
//! coin of [`plan_dynamic`] and the waypoint draw of [`plan_errt`]. With
//! those features disabled the primary stream is consumed exactly as
//! [`plan_rrt`] consumes it, so the resulting trees are identical.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{
    arc_between, edge_collides, is_feasible, max_rate_arc, ArcEdge, Point, Pose, RobotParams, WorldModel,
    DEGENERATE_EPS, FEASIBILITY_TOL,
};
use crate::tree::{Forest, NodeId, OldNode, PathRecord, Tree};

/// Sampling iterations allowed per node of budget before giving up.
pub const ITERATIONS_PER_NODE: usize = 10;
/// Replicated waypoints must be hit to within this distance.
pub const REPLICA_MATCH_TOL: f64 = 1e-9;
/// Minimum cost decrease for a rewire to count as an improvement.
pub const REWIRE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerParams {
    /// Minimum steer distance.
    pub step: f64,
    /// Maximum steer distance and RRT* neighbourhood radius.
    pub neighbor_radius: f64,
    pub p_goal: f64,
    pub p_scan: f64,
    pub p_waypoint: f64,
    pub max_nodes: usize,
    pub goal_tolerance: f64,
    pub rng_seed: u64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            step: 0.05,
            neighbor_radius: 0.15,
            p_goal: 0.2,
            p_scan: 0.7,
            p_waypoint: 0.7,
            max_nodes: 5000,
            goal_tolerance: 0.1,
            rng_seed: 0,
        }
    }
}

impl PlannerParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    /// Returns the name of the first violated constraint.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        for (name, p) in [("p_goal", self.p_goal), ("p_scan", self.p_scan), ("p_waypoint", self.p_waypoint)] {
            if !(0.0..=1.0).contains(&p) {
                return Err((name, format!("probability must lie in [0, 1], got {p}")));
            }
        }
        if self.p_goal + self.p_waypoint > 1.0 + 1e-12 {
            return Err(("p_waypoint", "p_goal + p_waypoint must not exceed 1".into()));
        }
        if !(self.step > 0.0) {
            return Err(("step", format!("must be positive, got {}", self.step)));
        }
        if !(self.neighbor_radius > self.step) {
            return Err(("neighbor_radius", "must exceed step".into()));
        }
        if self.max_nodes < 1 {
            return Err(("max_nodes", "must be at least 1".into()));
        }
        if !(self.goal_tolerance > 0.0) {
            return Err(("goal_tolerance", "must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanStatus {
    Found,
    NodeBudgetExhausted,
}

impl fmt::Display for PlanStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanStatus::Found => "found",
            PlanStatus::NodeBudgetExhausted => "node_budget_exhausted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Rrt,
    RrtStar,
    Errt,
    Dynamic,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Rrt, Algorithm::RrtStar, Algorithm::Errt, Algorithm::Dynamic];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Rrt => "rrt",
            Algorithm::RrtStar => "rrt_star",
            Algorithm::Errt => "errt",
            Algorithm::Dynamic => "dynamic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub path: Option<PathRecord>,
    pub tree: Tree,
    /// Nodes inserted by the sample/steer loop.
    pub nodes_expanded: usize,
    /// Nodes copied from old paths (dynamic planner only).
    pub nodes_replicated: usize,
    pub iterations: usize,
    pub wall_time: Duration,
    pub status: PlanStatus,
}

impl PlanResult {
    pub fn cost(&self) -> Option<f64> {
        self.path.as_ref().map(PathRecord::cost)
    }

    pub fn is_found(&self) -> bool {
        self.status == PlanStatus::Found
    }
}

/// One sample from the workspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample {
    Goal(Point),
    Uniform(Point),
    Waypoint(Point),
}

impl Sample {
    pub fn point(&self) -> Point {
        match *self {
            Sample::Goal(p) | Sample::Uniform(p) | Sample::Waypoint(p) => p,
        }
    }

    pub fn is_goal(&self) -> bool {
        matches!(self, Sample::Goal(_))
    }
}

/// The two RNG streams of a run.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub primary: ChaCha8Rng,
    pub coin: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        let primary = ChaCha8Rng::seed_from_u64(seed);
        let mut coin = ChaCha8Rng::seed_from_u64(seed);
        coin.set_stream(1);
        Self { primary, coin }
    }
}

/// Goal-biased sample: the goal with probability `p_goal`, otherwise a
/// uniform point in the workspace. Always draws from `rng` in the same
/// pattern: one coin, then two coordinates when not the goal.
pub fn sample<R: Rng>(world: &WorldModel, goal: Point, p_goal: f64, rng: &mut R) -> Sample {
    if rng.gen::<f64>() < p_goal {
        return Sample::Goal(goal);
    }
    let x = world.min.x + rng.gen::<f64>() * world.width();
    let y = world.min.y + rng.gen::<f64>() * world.height();
    Sample::Uniform(Point::new(x, y))
}

/// ERRT three-way draw. A waypoint is chosen with probability `p_waypoint`
/// from `coin`; otherwise the goal-biased draw runs on `primary` with the
/// goal probability rescaled so the overall goal probability is `p_goal`.
/// With an empty cache this is exactly [`sample`] on `primary`.
pub fn sample_errt<R: Rng>(
    world: &WorldModel,
    goal: Point,
    params: &PlannerParams,
    cache: &[Point],
    primary: &mut R,
    coin: &mut R,
) -> Sample {
    if cache.is_empty() {
        return sample(world, goal, params.p_goal, primary);
    }
    if coin.gen::<f64>() < params.p_waypoint {
        let i = coin.gen_range(0..cache.len());
        return Sample::Waypoint(cache[i]);
    }
    let rest = 1.0 - params.p_waypoint;
    let p_goal = if rest > 0.0 { (params.p_goal / rest).min(1.0) } else { 0.0 };
    sample(world, goal, p_goal, primary)
}

/// Shared per-run context.
struct Search<'a> {
    world: &'a WorldModel,
    robot: &'a RobotParams,
    params: &'a PlannerParams,
    tree: Tree,
    rng: RngStreams,
    expanded: usize,
    replicated: usize,
    iterations: usize,
    started: Instant,
}

impl<'a> Search<'a> {
    fn new(start: Pose, goal: Point, world: &'a WorldModel, robot: &'a RobotParams, params: &'a PlannerParams) -> Self {
        Self {
            world,
            robot,
            params,
            tree: Tree::new(start, goal, params.goal_tolerance, params.neighbor_radius),
            rng: RngStreams::new(params.rng_seed),
            expanded: 0,
            replicated: 0,
            iterations: 0,
            started: Instant::now(),
        }
    }

    fn keep_going(&self) -> bool {
        self.expanded < self.params.max_nodes && self.iterations < self.params.max_nodes * ITERATIONS_PER_NODE
    }

    fn finish(self, status: PlanStatus) -> PlanResult {
        let path = match status {
            PlanStatus::Found => Some(self.tree.extract_path().expect("found implies a goal node")),
            PlanStatus::NodeBudgetExhausted => None,
        };
        PlanResult {
            path,
            nodes_expanded: self.expanded,
            nodes_replicated: self.replicated,
            iterations: self.iterations,
            wall_time: self.started.elapsed(),
            status,
            tree: self.tree,
        }
    }

    /// Root already at the goal.
    fn trivially_done(&mut self) -> bool {
        if self.tree.is_at_goal(Tree::ROOT) {
            self.tree.set_goal_node(Tree::ROOT).expect("root is at goal");
            return true;
        }
        false
    }
}

/// Extends from `from` towards `target`.
///
/// The target is pulled in to `neighbor_radius`; targets closer than `step`
/// are discarded unless they are the goal. An arc that needs more than
/// `omega_max` is replaced by a maximum-rate arc of the same reach turning
/// towards the target. Returns `None` for targets behind the heading and
/// for colliding edges.
pub fn steer(
    from: &Pose,
    target: Point,
    is_goal: bool,
    params: &PlannerParams,
    robot: &RobotParams,
    world: &WorldModel,
) -> Option<(Pose, ArcEdge)> {
    let origin = from.position();
    let d = origin.distance(&target);
    if d <= DEGENERATE_EPS || (d < params.step && !is_goal) {
        return None;
    }
    let reach = d.min(params.neighbor_radius);
    let target = if d > params.neighbor_radius {
        let s = params.neighbor_radius / d;
        Point::new(origin.x + (target.x - origin.x) * s, origin.y + (target.y - origin.y) * s)
    } else {
        target
    };
    let edge = match arc_between(from, target, robot, world.k) {
        Ok(e) if is_feasible(&e, robot) => e,
        Ok(e) => max_rate_arc(from, e.alpha, robot, reach, world.k),
        Err(_) => return None,
    };
    if edge_collides(&edge, from, world) {
        return None;
    }
    Some((edge.end_pose, edge))
}

/// Exact connection `from -> to`: feasible, forward and collision free.
fn connect(from: &Pose, to: Point, robot: &RobotParams, world: &WorldModel) -> Option<ArcEdge> {
    let edge = arc_between(from, to, robot, world.k).ok()?;
    if !is_feasible(&edge, robot) || edge_collides(&edge, from, world) {
        return None;
    }
    Some(edge)
}

/// Plain goal-biased RRT.
pub fn plan_rrt(start: Pose, goal: Point, world: &WorldModel, robot: &RobotParams, params: &PlannerParams) -> PlanResult {
    let mut s = Search::new(start, goal, world, robot, params);
    if s.trivially_done() {
        return s.finish(PlanStatus::Found);
    }
    while s.keep_going() {
        s.iterations += 1;
        let smp = sample(world, goal, params.p_goal, &mut s.rng.primary);
        if let Some(id) = extend(&mut s, smp) {
            if s.tree.is_at_goal(id) {
                s.tree.set_goal_node(id).expect("checked");
                return s.finish(PlanStatus::Found);
            }
        }
    }
    s.finish(PlanStatus::NodeBudgetExhausted)
}

/// Number of Euclidean neighbours examined by [`select_nearest`].
pub const NEAREST_CANDIDATES: usize = 16;

/// True if a single forward arc within the turn-rate limit reaches `target`.
pub fn arc_reachable(from: &Pose, target: Point, robot: &RobotParams) -> bool {
    let dx = target.x - from.x;
    let dy = target.y - from.y;
    let d = dx.hypot(dy);
    if d <= DEGENERATE_EPS {
        return false;
    }
    let alpha = crate::geom::normalize_angle(dy.atan2(dx) - from.heading());
    alpha.abs() < std::f64::consts::FRAC_PI_2 && 2.0 * alpha.sin().abs() / d * robot.speed() <= robot.omega_max() + FEASIBILITY_TOL
}

/// Expansion parent for `target`: the closest of the nearest few nodes
/// that can reach it with one feasible forward arc, else the plain
/// Euclidean nearest node.
pub fn select_nearest(tree: &Tree, target: Point, robot: &RobotParams) -> NodeId {
    let candidates = tree.k_nearest(target, NEAREST_CANDIDATES);
    candidates
        .iter()
        .copied()
        .find(|&n| arc_reachable(&tree.node(n).pose, target, robot))
        .unwrap_or(candidates[0])
}

/// nearest -> steer -> insert. Returns the new node.
fn extend(s: &mut Search<'_>, smp: Sample) -> Option<NodeId> {
    let nearest = select_nearest(&s.tree, smp.point(), s.robot);
    let from = s.tree.node(nearest).pose;
    let (pose, edge) = steer(&from, smp.point(), smp.is_goal(), s.params, s.robot, s.world)?;
    let id = s.tree.insert_node(nearest, pose, edge).expect("nearest exists");
    s.expanded += 1;
    Some(id)
}

/// ERRT: RRT with a waypoint cache from the previous plan. On success the
/// cache is replaced by the new path's positions.
pub fn plan_errt(
    start: Pose,
    goal: Point,
    world: &WorldModel,
    robot: &RobotParams,
    params: &PlannerParams,
    waypoint_cache: &mut Vec<Point>,
) -> PlanResult {
    let mut s = Search::new(start, goal, world, robot, params);
    let result = if s.trivially_done() {
        s.finish(PlanStatus::Found)
    } else {
        let mut status = PlanStatus::NodeBudgetExhausted;
        while s.keep_going() {
            s.iterations += 1;
            let smp = {
                let RngStreams { primary, coin } = &mut s.rng;
                sample_errt(world, goal, params, waypoint_cache, primary, coin)
            };
            if let Some(id) = extend(&mut s, smp) {
                if s.tree.is_at_goal(id) {
                    s.tree.set_goal_node(id).expect("checked");
                    status = PlanStatus::Found;
                    break;
                }
            }
        }
        s.finish(status)
    };
    if let Some(path) = &result.path {
        *waypoint_cache = path.positions();
    }
    result
}

/// Goal nodes seen so far and the budget rule of RRT*.
struct GoalSet {
    nodes: Vec<NodeId>,
}

impl GoalSet {
    fn best(&self, tree: &Tree) -> Option<NodeId> {
        self.nodes
            .iter()
            .copied()
            .min_by(|&a, &b| tree.node(a).cost.total_cmp(&tree.node(b).cost).then(a.cmp(&b)))
    }
}

/// RRT* with a fixed neighbourhood ball.
///
/// Without a `budget` the tree is grown to `max_nodes` and the cheapest goal
/// path is returned. With a budget the search stops as soon as the cheapest
/// goal node costs at most `budget`; if the node budget runs out first, the
/// cheapest goal path found, if any, is still returned.
pub fn plan_rrt_star(
    start: Pose,
    goal: Point,
    world: &WorldModel,
    robot: &RobotParams,
    params: &PlannerParams,
    budget: Option<f64>,
) -> PlanResult {
    let mut s = Search::new(start, goal, world, robot, params);
    if s.trivially_done() {
        return s.finish(PlanStatus::Found);
    }
    let mut goals = GoalSet { nodes: Vec::new() };
    while s.keep_going() {
        s.iterations += 1;
        let smp = sample(world, goal, params.p_goal, &mut s.rng.primary);
        let Some(id) = extend_star(&mut s, smp) else { continue };
        rewire_cascade(&mut s.tree, id, params, robot, world);
        if s.tree.is_at_goal(id) {
            goals.nodes.push(id);
        }
        if let Some(best) = goals.best(&s.tree) {
            s.tree.set_goal_node(best).expect("goal set holds goal nodes");
            let cost = s.tree.node(best).cost;
            if budget.is_some_and(|b| cost <= b) {
                return s.finish(PlanStatus::Found);
            }
        }
    }
    match goals.best(&s.tree) {
        Some(best) => {
            s.tree.set_goal_node(best).expect("goal set holds goal nodes");
            s.finish(PlanStatus::Found)
        }
        None => s.finish(PlanStatus::NodeBudgetExhausted),
    }
}

/// Steer from the nearest node, then pick the cheapest parent in the ball.
fn extend_star(s: &mut Search<'_>, smp: Sample) -> Option<NodeId> {
    let nearest = select_nearest(&s.tree, smp.point(), s.robot);
    let from = s.tree.node(nearest).pose;
    let (pose, edge) = steer(&from, smp.point(), smp.is_goal(), s.params, s.robot, s.world)?;
    let (parent, edge) = choose_parent(&s.tree, pose.position(), nearest, edge, s.params.neighbor_radius, s.robot, s.world);
    let id = s.tree.insert_node(parent, edge.end_pose, edge).expect("parent exists");
    s.expanded += 1;
    Some(id)
}

/// Cheapest parent for a new node at `q` among `nearest` (reaching `q` by
/// `edge`) and every node within `radius` that reaches `q` exactly with a
/// feasible, collision-free arc. Ties go to the lower id.
pub fn choose_parent(
    tree: &Tree,
    q: Point,
    nearest: NodeId,
    edge: ArcEdge,
    radius: f64,
    robot: &RobotParams,
    world: &WorldModel,
) -> (NodeId, ArcEdge) {
    let mut best = (tree.node(nearest).cost + edge.energy, nearest, edge);
    for n in tree.near_radius(q, radius) {
        if n == nearest {
            continue;
        }
        let node = tree.node(n);
        // cheap cost bound before arc and collision work
        if node.cost + world.k * node.pose.position().distance(&q) > best.0 {
            continue;
        }
        if let Some(e) = connect(&node.pose, q, robot, world) {
            let c = node.cost + e.energy;
            if c < best.0 || (c == best.0 && n < best.1) {
                best = (c, n, e);
            }
        }
    }
    (best.1, best.2)
}

type Update = (NodeId, Pose, ArcEdge, f64);

/// Evaluates moving `node` under `parent`. On success returns the
/// recomputed pose/edge/cost for `node` and its whole subtree.
///
/// Moving a node changes its arrival heading, so every descendant edge is
/// recomputed from the new headings. The move is accepted only if `node`
/// gets strictly cheaper, every recomputed edge stays feasible and
/// collision free, and no descendant gets more expensive.
pub fn reparent_plan(
    tree: &Tree,
    node: NodeId,
    parent: NodeId,
    robot: &RobotParams,
    world: &WorldModel,
) -> Option<Vec<Update>> {
    if node == Tree::ROOT || tree.node(node).parent == Some(parent) || tree.is_ancestor(node, parent) {
        return None;
    }
    let p = tree.node(parent);
    let n = tree.node(node);
    let q = n.pose.position();
    if p.cost + world.k * p.pose.position().distance(&q) >= n.cost - REWIRE_EPS {
        return None;
    }
    let edge = arc_between(&p.pose, q, robot, world.k).ok()?;
    let new_cost = p.cost + edge.energy;
    if !is_feasible(&edge, robot) || new_cost >= n.cost - REWIRE_EPS || edge_collides(&edge, &p.pose, world) {
        return None;
    }
    let mut updates = vec![(node, edge.end_pose, edge, new_cost)];
    let mut i = 0;
    while i < updates.len() {
        let (id, pose, _, cost) = updates[i];
        for &c in &tree.node(id).children {
            let child = tree.node(c);
            let e = arc_between(&pose, child.pose.position(), robot, world.k).ok()?;
            let c_cost = cost + e.energy;
            if !is_feasible(&e, robot) || c_cost > child.cost + REWIRE_EPS || edge_collides(&e, &pose, world) {
                return None;
            }
            updates.push((c, e.end_pose, e, c_cost));
        }
        i += 1;
    }
    Some(updates)
}

/// Rewires neighbours through `seed`, then propagates until no re-parenting
/// improves any node.
///
/// Two work lists are kept. A node in `sources` is tried as the new parent
/// of each neighbour; a node in `targets` is tried under each neighbour.
/// After a move, every node of the moved subtree becomes both, and the old
/// and new ancestors become targets, because their subtrees changed and a
/// move that was refused before may now be accepted.
fn rewire_cascade(tree: &mut Tree, seed: NodeId, params: &PlannerParams, robot: &RobotParams, world: &WorldModel) {
    let mut sources = WorkList::default();
    let mut targets = WorkList::default();
    sources.push(seed);
    loop {
        let mv = if let Some(u) = sources.pop() {
            let pos = tree.node(u).pose.position();
            tree.near_radius(pos, params.neighbor_radius)
                .into_iter()
                .filter(|&w| w != u)
                .find_map(|w| reparent_plan(tree, w, u, robot, world).map(|up| (w, u, up)))
                .inspect(|_| sources.push(u))
        } else if let Some(w) = targets.pop() {
            let pos = tree.node(w).pose.position();
            tree.near_radius(pos, params.neighbor_radius)
                .into_iter()
                .filter(|&u| u != w)
                .find_map(|u| reparent_plan(tree, w, u, robot, world).map(|up| (w, u, up)))
                .inspect(|_| targets.push(w))
        } else {
            break;
        };
        let Some((w, u, updates)) = mv else { continue };
        let old_ancestors = tree.ancestry(w);
        tree.reparent(w, u, &updates);
        for &(id, ..) in &updates {
            sources.push(id);
            targets.push(id);
        }
        for a in old_ancestors.into_iter().skip(1).chain(tree.ancestry(u)) {
            targets.push(a);
        }
    }
}

/// FIFO queue without duplicates.
#[derive(Default)]
struct WorkList {
    queue: VecDeque<NodeId>,
    queued: HashSet<NodeId>,
}

impl WorkList {
    fn push(&mut self, id: NodeId) {
        if self.queued.insert(id) {
            self.queue.push_back(id);
        }
    }

    fn pop(&mut self) -> Option<NodeId> {
        let id = self.queue.pop_front()?;
        self.queued.remove(&id);
        Some(id)
    }
}

/// All (node, parent) pairs where re-parenting would still improve the
/// tree under the [`reparent_plan`] rule. Empty after [`plan_rrt_star`].
pub fn rewire_improvements(tree: &Tree, radius: f64, robot: &RobotParams, world: &WorldModel) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    for n in tree.nodes().iter().skip(1) {
        for p in tree.near_radius(n.pose.position(), radius) {
            if p != n.id && reparent_plan(tree, n.id, p, robot, world).is_some() {
                out.push((n.id, p));
            }
        }
    }
    out
}

/// Dynamic path RRT: plain RRT growth, and after each insertion, with
/// probability `p_scan`, an attempt to graft a nearby old path from the
/// forest onto the new node. Found paths are pushed into the forest.
pub fn plan_dynamic(
    start: Pose,
    goal: Point,
    world: &WorldModel,
    robot: &RobotParams,
    params: &PlannerParams,
    forest: &mut Forest,
) -> PlanResult {
    let mut s = Search::new(start, goal, world, robot, params);
    let result = if s.trivially_done() {
        s.finish(PlanStatus::Found)
    } else {
        let mut status = PlanStatus::NodeBudgetExhausted;
        'search: while s.keep_going() {
            s.iterations += 1;
            let smp = sample(world, goal, params.p_goal, &mut s.rng.primary);
            let Some(q_new) = extend(&mut s, smp) else { continue };
            let first_new = q_new;
            let coin: f64 = s.rng.coin.gen();
            if coin < params.p_scan {
                let old = forest.scan(s.tree.node(q_new).pose.position(), params.neighbor_radius);
                if !old.is_empty() {
                    let before = s.tree.len();
                    check_connection(&mut s.tree, forest, &old, q_new, robot, world);
                    s.replicated += s.tree.len() - before;
                }
            }
            for id in first_new..s.tree.len() {
                if s.tree.is_at_goal(id) {
                    s.tree.set_goal_node(id).expect("checked");
                    status = PlanStatus::Found;
                    break 'search;
                }
            }
        }
        s.finish(status)
    };
    if let Some(path) = &result.path {
        forest.push(path.clone());
    }
    result
}

/// Picks the old waypoint that `q_new` reaches most cheaply with an exact,
/// feasible, collision-free arc and replicates its path from there.
/// Returns the last replicated node, or `None` if nothing connects.
pub fn check_connection(
    tree: &mut Tree,
    forest: &Forest,
    old_nodes: &[OldNode],
    q_new: NodeId,
    robot: &RobotParams,
    world: &WorldModel,
) -> Option<NodeId> {
    let from = tree.node(q_new).pose;
    let base = tree.node(q_new).cost;
    let mut best: Option<(f64, OldNode)> = None;
    for &old in old_nodes {
        let target = forest.waypoint(old).pose.position();
        if tree.has_node_at(target, REPLICA_MATCH_TOL) {
            continue;
        }
        let Some(edge) = connect(&from, target, robot, world) else { continue };
        let cost = base + edge.energy;
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, old));
        }
    }
    let (_, junction) = best?;
    path_building(tree, forest.record(junction.record), junction.index, q_new, robot, world)
}

/// Attaches waypoint `junction` of `record` under `q_new`, then keeps
/// attaching the following waypoints, each steered from the node just
/// added. Stops at the first infeasible, backward or colliding step, or at
/// a waypoint already present in the tree. Returns the last node added.
pub fn path_building(
    tree: &mut Tree,
    record: &PathRecord,
    junction: usize,
    q_new: NodeId,
    robot: &RobotParams,
    world: &WorldModel,
) -> Option<NodeId> {
    let mut last = q_new;
    let mut added = None;
    for (i, wp) in record.waypoints.iter().enumerate().skip(junction) {
        let target = wp.pose.position();
        if i > junction && tree.has_node_at(target, REPLICA_MATCH_TOL) {
            break;
        }
        let from = tree.node(last).pose;
        let Some(edge) = connect(&from, target, robot, world) else { break };
        last = tree.insert_replica(last, edge.end_pose, edge).expect("last node exists");
        added = Some(last);
    }
    added
}

/// A violated structural or kinematic property found by [`audit_tree`].
#[derive(Debug, Clone, PartialEq)]
pub struct AuditFailure {
    pub node: NodeId,
    pub what: String,
}

/// Full-tree audit: parent/child consistency, single root, acyclicity,
/// stored cost versus summed edge energies, and every edge feasible,
/// collision free, positive and consistent with its parent's pose.
pub fn audit_tree(tree: &Tree, robot: &RobotParams, world: &WorldModel) -> Result<(), AuditFailure> {
    let fail = |node: NodeId, what: String| Err(AuditFailure { node, what });
    let root = tree.root();
    if root.parent.is_some() || root.cost != 0.0 {
        return fail(0, "root has a parent or nonzero cost".into());
    }
    let mut visits = vec![0usize; tree.len()];
    for id in tree.subtree(Tree::ROOT) {
        visits[id] += 1;
    }
    if let Some(bad) = visits.iter().position(|&v| v != 1) {
        return fail(bad, format!("visited {} times from the root", visits[bad]));
    }
    for n in tree.nodes().iter().skip(1) {
        let Some(parent) = n.parent else {
            return fail(n.id, "second root".into());
        };
        let p = tree.node(parent);
        if p.children.iter().filter(|&&c| c == n.id).count() != 1 {
            return fail(n.id, "missing from parent's children".into());
        }
        let Some(edge) = n.edge_from_parent else {
            return fail(n.id, "non-root node without an edge".into());
        };
        if (p.cost + edge.energy - n.cost).abs() > 1e-9 {
            return fail(n.id, format!("cost {} != parent {} + edge {}", n.cost, p.cost, edge.energy));
        }
        let chain: f64 = tree
            .ancestry(n.id)
            .iter()
            .filter_map(|&a| tree.node(a).edge_from_parent.map(|e| e.energy))
            .sum();
        if (chain - n.cost).abs() > 1e-9 {
            return fail(n.id, format!("chain sum {chain} != stored cost {}", n.cost));
        }
        if !(edge.energy > 0.0) {
            return fail(n.id, "non-positive edge energy".into());
        }
        if edge.omega.abs() > robot.omega_max() + FEASIBILITY_TOL {
            return fail(n.id, format!("|omega| = {} exceeds {}", edge.omega.abs(), robot.omega_max()));
        }
        let replay = edge.pose_at(&p.pose, edge.length);
        if replay.position().distance(&n.pose.position()) > 1e-6 {
            return fail(n.id, "edge does not end at the node".into());
        }
        if edge_collides(&edge, &p.pose, world) {
            return fail(n.id, "edge collides".into());
        }
    }
    if let Some(g) = tree.goal_node() {
        if !tree.is_at_goal(g) {
            return fail(g, "goal node outside tolerance".into());
        }
    }
    Ok(())
}

/// Returns the path cost recomputed from its tree edges.
pub fn path_edge_sum(tree: &Tree) -> Option<f64> {
    let g = tree.goal_node()?;
    Some(
        tree.ancestry(g)
            .iter()
            .filter_map(|&a| tree.node(a).edge_from_parent.map(|e| e.energy))
            .sum(),
    )
}

/// Runs `algorithm` once. `forest` is used by the dynamic planner and
/// `cache` by ERRT; both are updated on success.
pub fn run_algorithm(
    algorithm: Algorithm,
    start: Pose,
    goal: Point,
    world: &WorldModel,
    robot: &RobotParams,
    params: &PlannerParams,
    forest: &mut Forest,
    cache: &mut Vec<Point>,
) -> PlanResult {
    match algorithm {
        Algorithm::Rrt => plan_rrt(start, goal, world, robot, params),
        Algorithm::RrtStar => plan_rrt_star(start, goal, world, robot, params, None),
        Algorithm::Errt => plan_errt(start, goal, world, robot, params, cache),
        Algorithm::Dynamic => plan_dynamic(start, goal, world, robot, params, forest),
    }
}
