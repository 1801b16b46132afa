//! RRT-based detection of points on the border between mapped free space and
//! unknown space.
//!
//! A local tree belongs to one robot and is re-rooted at that robot every time
//! it emits a detection; the global tree is grown for the whole run.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::geometry::Point2;
use crate::gridmap::{CellIndex, CellState, OccupancyGrid};
use crate::RobotId;

pub const DEFAULT_LOCAL_ETA: f64 = 1.0;
pub const DEFAULT_GLOBAL_ETA: f64 = 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("tree root ({x:.3}, {y:.3}) is not in free space")]
    InvalidRoot { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeMode {
    Local(RobotId),
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionSource {
    Local(RobotId),
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionPoint {
    pub position: Point2,
    pub source: DetectionSource,
}

#[derive(Debug, Clone)]
pub struct RrtTree {
    nodes: Vec<Point2>,
    parents: Vec<usize>,
    eta: f64,
    mode: TreeMode,
    /// Where a local tree re-roots after a detection (its robot's position).
    anchor: Point2,
}

impl RrtTree {
    pub fn new(mode: TreeMode, root: Point2, eta: f64) -> Self {
        Self { nodes: vec![root], parents: vec![0], eta, mode, anchor: root }
    }

    pub fn local(robot: RobotId, root: Point2, eta: f64) -> Self {
        Self::new(TreeMode::Local(robot), root, eta)
    }

    pub fn global(root: Point2, eta: f64) -> Self {
        Self::new(TreeMode::Global, root, eta)
    }

    pub fn root(&self) -> Point2 {
        self.nodes[0]
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn mode(&self) -> TreeMode {
        self.mode
    }

    /// Updates the owning robot's position for the next reset.
    pub fn set_anchor(&mut self, p: Point2) {
        self.anchor = p;
    }

    /// Discards every node and restarts from `root`.
    pub fn reset(&mut self, root: Point2) {
        self.nodes.clear();
        self.parents.clear();
        self.nodes.push(root);
        self.parents.push(0);
    }

    /// (parent, child) segments for every non-root node.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.nodes.iter().zip(&self.parents).skip(1).map(|(n, &p)| (self.nodes[p], *n))
    }

    fn nearest(&self, p: &Point2) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.distance_sq(p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Tree edges as one SVG document, in world coordinates scaled by `scale` px/m.
    pub fn to_svg(&self, grid: &OccupancyGrid, scale: f64) -> String {
        let (lo, hi) = grid.bounds();
        let (w, h) = ((hi.x - lo.x) * scale, (hi.y - lo.y) * scale);
        let mut s = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\">\n");
        for (a, b) in self.edges() {
            let _ = writeln!(
                s,
                "<polyline points=\"{:.2},{:.2} {:.2},{:.2}\" stroke=\"#2a7\" stroke-width=\"1\" fill=\"none\"/>",
                (a.x - lo.x) * scale,
                (a.y - lo.y) * scale,
                (b.x - lo.x) * scale,
                (b.y - lo.y) * scale
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// A Free cell with at least one Unknown cell among its eight neighbours.
pub fn is_frontier_cell(grid: &OccupancyGrid, cell: CellIndex) -> bool {
    grid.get(cell) == CellState::Free && grid.neighbors8(cell).any(|n| grid.get(n) == CellState::Unknown)
}

enum Walk {
    Clear,
    Blocked,
    HitUnknown(Option<CellIndex>),
}

fn walk_segment(grid: &OccupancyGrid, a: Point2, b: Point2) -> Walk {
    let mut outcome = Walk::Clear;
    let mut last_free: Option<CellIndex> = None;
    crate::gridmap::traverse(grid, a, b, |x, y| match grid.get_signed(x, y) {
        Some(CellState::Free) => {
            last_free = Some(CellIndex::new(x as usize, y as usize));
            true
        }
        Some(CellState::Unknown) => {
            outcome = Walk::HitUnknown(last_free);
            false
        }
        Some(CellState::Occupied) | None => {
            outcome = Walk::Blocked;
            false
        }
    });
    outcome
}

/// One RRT extension toward a uniform sample over the grid's bounding box.
///
/// Returns a detection when the steered segment runs into Unknown space
/// before any obstacle; the point is the center of the last Free cell on the
/// segment. A local tree is then re-rooted at its anchor. A fully Free
/// segment adds a node; a blocked one leaves the tree unchanged.
pub fn grow_step<R: Rng + ?Sized>(
    tree: &mut RrtTree,
    grid: &OccupancyGrid,
    rng: &mut R,
) -> Result<Option<DetectionPoint>, DetectError> {
    let root = tree.root();
    if grid.state_at(root) != Some(CellState::Free) {
        return Err(DetectError::InvalidRoot { x: root.x, y: root.y });
    }
    let (lo, hi) = grid.bounds();
    let sample = Point2::new(lo.x + rng.random::<f64>() * (hi.x - lo.x), lo.y + rng.random::<f64>() * (hi.y - lo.y));
    let nearest_idx = tree.nearest(&sample);
    let nearest = tree.nodes[nearest_idx];
    let new = nearest.step_toward(&sample, tree.eta);
    if new == nearest {
        return Ok(None);
    }
    match walk_segment(grid, nearest, new) {
        Walk::Blocked => Ok(None),
        Walk::HitUnknown(None) => Ok(None),
        Walk::HitUnknown(Some(cell)) => {
            let source = match tree.mode {
                TreeMode::Local(id) => {
                    let anchor = tree.anchor;
                    tree.reset(anchor);
                    DetectionSource::Local(id)
                }
                TreeMode::Global => DetectionSource::Global,
            };
            Ok(Some(DetectionPoint { position: grid.cell_center(cell), source }))
        }
        Walk::Clear => {
            tree.nodes.push(new);
            tree.parents.push(nearest_idx);
            Ok(None)
        }
    }
}
