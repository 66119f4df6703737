//! Search trees with a uniform-grid spatial index, extracted paths, and the
//! FIFO forest of past paths used for warm starts.

use std::collections::{HashMap, VecDeque};
use std::io::{self, Write};

use thiserror::Error;

use crate::geom::{ArcEdge, Point, Pose};
use crate::numfmt::g9;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("unknown parent node {0}")]
    UnknownParent(NodeId),
    #[error("no path: goal not reached")]
    NoPath,
    #[error("node {0} is not within goal tolerance")]
    NotAtGoal(NodeId),
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: NodeId,
    pub pose: Pose,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Cost-to-come from the root.
    pub cost: f64,
    pub edge_from_parent: Option<ArcEdge>,
    pub part_of_old_path: bool,
}

type CellKey = (i64, i64);

#[derive(Debug, Clone)]
struct SpatialGrid {
    cell: f64,
    cells: HashMap<CellKey, Vec<NodeId>>,
    lo: CellKey,
    hi: CellKey,
}

impl SpatialGrid {
    fn new(cell: f64) -> Self {
        Self {
            cell,
            cells: HashMap::new(),
            lo: (i64::MAX, i64::MAX),
            hi: (i64::MIN, i64::MIN),
        }
    }

    fn key(&self, p: Point) -> CellKey {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Point, id: NodeId) {
        let k = self.key(p);
        self.lo = (self.lo.0.min(k.0), self.lo.1.min(k.1));
        self.hi = (self.hi.0.max(k.0), self.hi.1.max(k.1));
        self.cells.entry(k).or_default().push(id);
    }

    /// Cells at Chebyshev distance exactly `ring` from `center`, clipped to
    /// the occupied bounding box.
    fn ring(&self, center: CellKey, ring: i64, mut visit: impl FnMut(NodeId)) {
        let mut take = |k: CellKey| {
            if let Some(ids) = self.cells.get(&k) {
                ids.iter().for_each(|&id| visit(id));
            }
        };
        if ring == 0 {
            take(center);
            return;
        }
        let (cx, cy) = center;
        let (lo, hi) = (self.lo, self.hi);
        let x0 = (cx - ring).max(lo.0);
        let x1 = (cx + ring).min(hi.0);
        for y in [cy - ring, cy + ring] {
            if (lo.1..=hi.1).contains(&y) {
                for x in x0..=x1 {
                    take((x, y));
                }
            }
        }
        let y0 = (cy - ring + 1).max(lo.1);
        let y1 = (cy + ring - 1).min(hi.1);
        for x in [cx - ring, cx + ring] {
            if (lo.0..=hi.0).contains(&x) {
                for y in y0..=y1 {
                    take((x, y));
                }
            }
        }
    }

    /// Largest ring around `center` that can still hold occupied cells.
    fn max_ring(&self, center: CellKey) -> i64 {
        let dx = (center.0 - self.lo.0).abs().max((self.hi.0 - center.0).abs());
        let dy = (center.1 - self.lo.1).abs().max((self.hi.1 - center.1).abs());
        dx.max(dy)
    }
}

/// Small trees are searched by brute force; ring walks over an almost
/// empty grid cost more than they save.
const LINEAR_SCAN_MAX: usize = 64;

/// Rooted search tree. Node ids are insertion ordered; the root is id 0.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    goal: Point,
    goal_tolerance: f64,
    goal_node: Option<NodeId>,
    grid: SpatialGrid,
}

impl Tree {
    /// `cell_size` sets the spatial grid resolution (planners use the steer radius).
    pub fn new(root: Pose, goal: Point, goal_tolerance: f64, cell_size: f64) -> Self {
        let mut grid = SpatialGrid::new(cell_size);
        grid.insert(root.position(), 0);
        Self {
            nodes: vec![TreeNode {
                id: 0,
                pose: root,
                parent: None,
                children: Vec::new(),
                cost: 0.0,
                edge_from_parent: None,
                part_of_old_path: false,
            }],
            goal,
            goal_tolerance,
            goal_node: None,
            grid,
        }
    }

    pub const ROOT: NodeId = 0;

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[Self::ROOT]
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn get(&self, id: NodeId) -> Option<&TreeNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn goal(&self) -> Point {
        self.goal
    }

    pub fn goal_tolerance(&self) -> f64 {
        self.goal_tolerance
    }

    pub fn goal_node(&self) -> Option<NodeId> {
        self.goal_node
    }

    pub fn is_at_goal(&self, id: NodeId) -> bool {
        self.nodes[id].pose.position().distance(&self.goal) <= self.goal_tolerance
    }

    pub fn set_goal_node(&mut self, id: NodeId) -> Result<(), TreeError> {
        if !self.is_at_goal(id) {
            return Err(TreeError::NotAtGoal(id));
        }
        self.goal_node = Some(id);
        Ok(())
    }

    pub fn insert_node(&mut self, parent: NodeId, pose: Pose, edge: ArcEdge) -> Result<NodeId, TreeError> {
        self.insert_flagged(parent, pose, edge, false)
    }

    /// Like [`Tree::insert_node`] but marks the node as replicated from an old path.
    pub fn insert_replica(&mut self, parent: NodeId, pose: Pose, edge: ArcEdge) -> Result<NodeId, TreeError> {
        self.insert_flagged(parent, pose, edge, true)
    }

    fn insert_flagged(&mut self, parent: NodeId, pose: Pose, edge: ArcEdge, old: bool) -> Result<NodeId, TreeError> {
        let parent_cost = self.nodes.get(parent).ok_or(TreeError::UnknownParent(parent))?.cost;
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            id,
            pose,
            parent: Some(parent),
            children: Vec::new(),
            cost: parent_cost + edge.energy,
            edge_from_parent: Some(edge),
            part_of_old_path: old,
        });
        self.nodes[parent].children.push(id);
        self.grid.insert(pose.position(), id);
        Ok(id)
    }

    /// Closest node to `p`; ties go to the lowest id.
    pub fn nearest(&self, p: Point) -> NodeId {
        if self.nodes.len() <= LINEAR_SCAN_MAX {
            return self.k_nearest(p, 1)[0];
        }
        let center = self.grid.key(p);
        let max_ring = self.grid.max_ring(center);
        let mut best: Option<(f64, NodeId)> = None;
        for ring in 0..=max_ring {
            self.grid.ring(center, ring, |id| {
                let d = self.nodes[id].pose.position().distance_sq(&p);
                if best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
                    best = Some((d, id));
                }
            });
            // Anything beyond this ring is at least `ring * cell` away.
            if let Some((bd, _)) = best {
                let bound = ring as f64 * self.grid.cell;
                if bd < bound * bound {
                    break;
                }
            }
        }
        best.map(|(_, id)| id).expect("tree always holds its root")
    }

    /// The `k` nodes closest to `p`, sorted by distance then id.
    pub fn k_nearest(&self, p: Point, k: usize) -> Vec<NodeId> {
        if self.nodes.len() <= LINEAR_SCAN_MAX {
            let mut all: Vec<(f64, NodeId)> =
                self.nodes.iter().map(|n| (n.pose.position().distance_sq(&p), n.id)).collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            return all.into_iter().take(k).map(|(_, id)| id).collect();
        }
        let center = self.grid.key(p);
        let max_ring = self.grid.max_ring(center);
        let mut found: Vec<(f64, NodeId)> = Vec::new();
        for ring in 0..=max_ring {
            self.grid.ring(center, ring, |id| {
                found.push((self.nodes[id].pose.position().distance_sq(&p), id));
            });
            if found.len() >= k {
                found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let bound = ring as f64 * self.grid.cell;
                if found[k - 1].0 < bound * bound {
                    break;
                }
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        found.truncate(k);
        found.into_iter().map(|(_, id)| id).collect()
    }

    /// Nodes within distance `r` of `p`, sorted by distance then id.
    pub fn near_radius(&self, p: Point, r: f64) -> Vec<NodeId> {
        let center = self.grid.key(p);
        let rings = ((r / self.grid.cell).ceil() as i64 + 1).min(self.grid.max_ring(center));
        let r2 = r * r;
        let mut found: Vec<(f64, NodeId)> = Vec::new();
        for ring in 0..=rings {
            self.grid.ring(center, ring, |id| {
                let d = self.nodes[id].pose.position().distance_sq(&p);
                if d <= r2 {
                    found.push((d, id));
                }
            });
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        found.into_iter().map(|(_, id)| id).collect()
    }

    /// True if some node sits at `p` (within `tol`).
    pub fn has_node_at(&self, p: Point, tol: f64) -> bool {
        !self.near_radius(p, tol).is_empty()
    }

    /// Ids along the parent chain from `id` up to and including the root.
    pub fn ancestry(&self, id: NodeId) -> Vec<NodeId> {
        let mut chain = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            chain.push(p);
            cur = p;
        }
        chain
    }

    /// True if `ancestor` lies on the parent chain of `id` (or equals it).
    pub fn is_ancestor(&self, ancestor: NodeId, id: NodeId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.nodes[c].parent;
        }
        false
    }

    /// Pre-order listing of the subtree rooted at `id`.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    /// Moves `id` under `new_parent` and installs recomputed poses, edges
    /// and costs for the affected nodes. Callers check validity first.
    pub(crate) fn reparent(&mut self, id: NodeId, new_parent: NodeId, updates: &[(NodeId, Pose, ArcEdge, f64)]) {
        if let Some(old) = self.nodes[id].parent {
            self.nodes[old].children.retain(|&c| c != id);
        }
        self.nodes[new_parent].children.push(id);
        self.nodes[id].parent = Some(new_parent);
        for &(n, pose, edge, cost) in updates {
            let node = &mut self.nodes[n];
            node.pose = pose;
            node.edge_from_parent = Some(edge);
            node.cost = cost;
        }
    }

    /// Root-to-goal path of the current goal node.
    pub fn extract_path(&self) -> Result<PathRecord, TreeError> {
        let goal = self.goal_node.ok_or(TreeError::NoPath)?;
        Ok(self.path_to(goal))
    }

    pub fn path_to(&self, id: NodeId) -> PathRecord {
        let waypoints = self
            .ancestry(id)
            .into_iter()
            .rev()
            .map(|n| Waypoint {
                pose: self.nodes[n].pose,
                cost: self.nodes[n].cost,
            })
            .collect();
        PathRecord { waypoints, stamp: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub pose: Pose,
    /// Cumulative cost from the first waypoint.
    pub cost: f64,
}

/// Ordered poses from a start to the goal with cumulative costs.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub waypoints: Vec<Waypoint>,
    /// Insertion stamp assigned by the forest.
    pub stamp: u64,
}

impl PathRecord {
    pub fn cost(&self) -> f64 {
        self.waypoints.last().map_or(0.0, |w| w.cost)
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.waypoints.iter().map(|w| w.pose.position()).collect()
    }

    pub const CSV_HEADER: &'static str = "x,y,heading,cumulative_cost";

    /// Writes `x,y,heading,cumulative_cost` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for w in &self.waypoints {
            writeln!(
                out,
                "{},{},{},{}",
                g9(w.pose.x),
                g9(w.pose.y),
                g9(w.pose.heading()),
                g9(w.cost)
            )?;
        }
        Ok(())
    }
}

/// Reference to a waypoint inside a forest: (record index, waypoint index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct OldNode {
    pub record: usize,
    pub index: usize,
}

/// Bounded FIFO of past paths. Record index 0 is the oldest.
#[derive(Debug, Clone)]
pub struct Forest {
    records: VecDeque<PathRecord>,
    capacity: usize,
    next_stamp: u64,
}

impl Forest {
    pub const DEFAULT_CAPACITY: usize = 5;

    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "forest capacity must be at least 1");
        Self {
            records: VecDeque::with_capacity(capacity),
            capacity,
            next_stamp: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, i: usize) -> &PathRecord {
        &self.records[i]
    }

    pub fn records(&self) -> impl Iterator<Item = &PathRecord> {
        self.records.iter()
    }

    pub fn push(&mut self, mut record: PathRecord) {
        record.stamp = self.next_stamp;
        self.next_stamp += 1;
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    /// Every waypoint within `r` of `p`, in record then waypoint order.
    pub fn scan(&self, p: Point, r: f64) -> Vec<OldNode> {
        let r2 = r * r;
        self.records
            .iter()
            .enumerate()
            .flat_map(|(ri, rec)| {
                rec.waypoints
                    .iter()
                    .enumerate()
                    .filter(move |(_, w)| w.pose.position().distance_sq(&p) <= r2)
                    .map(move |(wi, _)| OldNode { record: ri, index: wi })
            })
            .collect()
    }

    pub fn waypoint(&self, node: OldNode) -> &Waypoint {
        &self.records[node.record].waypoints[node.index]
    }
}

impl Default for Forest {
    fn default() -> Self {
        Self::new(Self::DEFAULT_CAPACITY)
    }
}
