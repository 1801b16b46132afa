use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::geometry::Point2;
use crate::gridmap::{CellIndex, CellState, OccupancyGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("start ({x:.3}, {y:.3}) is not on a free cell")]
    StartNotFree { x: f64, y: f64 },
    #[error("no path to goal")]
    NoPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// Start cell first, target cell last.
    pub cells: Vec<CellIndex>,
    /// Centers of `cells`.
    pub waypoints: Vec<Point2>,
    /// Length in meters (axial steps cost one cell, diagonal steps sqrt 2).
    pub cost: f64,
}

impl Path {
    pub fn target(&self) -> Point2 {
        *self.waypoints.last().expect("paths are never empty")
    }
}

/// Free cells farther than `inflation` (center to center) from every Occupied cell.
pub fn traversable_mask(known: &OccupancyGrid, inflation: f64) -> Vec<bool> {
    let (w, h) = (known.width() as i64, known.height() as i64);
    let mut mask: Vec<bool> = known.cells().iter().map(|&c| c == CellState::Free).collect();
    let r = (inflation / known.resolution()).floor() as i64;
    let limit = inflation * inflation;
    let res = known.resolution();
    let disc: Vec<(i64, i64)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64) * res * res <= limit)
        .collect();
    for (i, &c) in known.cells().iter().enumerate() {
        if c != CellState::Occupied {
            continue;
        }
        let (x, y) = ((i as i64) % w, (i as i64) / w);
        for &(dx, dy) in &disc {
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && ny >= 0 && nx < w && ny < h {
                mask[(ny * w + nx) as usize] = false;
            }
        }
    }
    mask
}

/// Single-cell version of [`traversable_mask`].
pub fn cell_traversable(known: &OccupancyGrid, cell: CellIndex, inflation: f64) -> bool {
    if known.get(cell) != CellState::Free {
        return false;
    }
    let res = known.resolution();
    let r = (inflation / res).floor() as i64;
    let limit = inflation * inflation;
    let (x, y) = (cell.x as i64, cell.y as i64);
    for dy in -r..=r {
        for dx in -r..=r {
            if ((dx * dx + dy * dy) as f64) * res * res <= limit && known.get_signed(x + dx, y + dy) == Some(CellState::Occupied) {
                return false;
            }
        }
    }
    true
}

/// Nearest traversable cell to `goal` whose center lies within `radius`.
fn project_goal(known: &OccupancyGrid, mask: &[bool], goal: Point2, radius: f64) -> Option<usize> {
    if let Some(c) = known.world_to_cell(goal) {
        let i = known.index_of(c);
        if mask[i] {
            return Some(i);
        }
    }
    let (cx, cy) = known.to_cell_coords(goal);
    let rc = radius / known.resolution();
    let x0 = ((cx - rc).floor() as i64).max(0);
    let y0 = ((cy - rc).floor() as i64).max(0);
    let x1 = ((cx + rc).ceil() as i64).min(known.width() as i64 - 1);
    let y1 = ((cy + rc).ceil() as i64).min(known.height() as i64 - 1);
    let mut best: Option<(f64, usize)> = None;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let cell = CellIndex::new(x as usize, y as usize);
            let i = known.index_of(cell);
            if !mask[i] {
                continue;
            }
            let d = known.cell_center(cell).distance(&goal);
            if d <= radius && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
    }
    best.map(|(_, i)| i)
}

/// Opens the Free cells inside the inflation zone that connect to the start,
/// within `2 * inflation` of it, so a robot that finds itself too close to
/// an obstacle can still leave.
fn release_start_region(known: &OccupancyGrid, mask: &mut [bool], start: usize, inflation: f64) {
    if mask[start] {
        return;
    }
    let w = known.width() as i64;
    let origin = known.cell_center(known.cell_of(start));
    let mut stack = vec![start];
    mask[start] = true;
    while let Some(i) = stack.pop() {
        let (x, y) = ((i as i64) % w, (i as i64) / w);
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            if known.get_signed(x + dx, y + dy) != Some(CellState::Free) {
                continue;
            }
            let n = ((y + dy) * w + x + dx) as usize;
            if known.cell_center(known.cell_of(n)).distance(&origin) > 2.0 * inflation {
                continue;
            }
            if !mask[n] {
                mask[n] = true;
                stack.push(n);
            }
        }
    }
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    index: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, then on index
        other.f.total_cmp(&self.f).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const MOVES: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// A* over the robot's known map.
///
/// Cells are traversable when Free and outside the inflation radius of every
/// Occupied cell; the start cell, and the inflated cells near it that connect
/// to it, are always allowed. Moves are 8-connected but
/// a diagonal step needs both adjacent axial cells traversable. A goal that is
/// not traversable is replaced by the nearest traversable cell within
/// `goal_search_radius`.
pub fn plan_path(
    known: &OccupancyGrid,
    start: Point2,
    goal: Point2,
    inflation: f64,
    goal_search_radius: f64,
) -> Result<Path, PlanError> {
    let start_cell = known
        .world_to_cell(start)
        .filter(|&c| known.get(c) == CellState::Free)
        .ok_or(PlanError::StartNotFree { x: start.x, y: start.y })?;
    let mut mask = traversable_mask(known, inflation);
    let start_i = known.index_of(start_cell);
    release_start_region(known, &mut mask, start_i, inflation);
    let target = project_goal(known, &mask, goal, goal_search_radius).ok_or(PlanError::NoPath)?;

    let w = known.width() as i64;
    let h = known.height() as i64;
    let res = known.resolution();
    let target_cell = known.cell_of(target);
    let heuristic = |i: usize| {
        let c = known.cell_of(i);
        let dx = (c.x as f64 - target_cell.x as f64).abs();
        let dy = (c.y as f64 - target_cell.y as f64).abs();
        (dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)) * res
    };

    let mut g = vec![f64::INFINITY; known.len()];
    let mut parent = vec![usize::MAX; known.len()];
    let mut closed = vec![false; known.len()];
    let mut open = BinaryHeap::new();
    g[start_i] = 0.0;
    open.push(Open { f: heuristic(start_i), index: start_i });

    while let Some(Open { index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        if index == target {
            break;
        }
        let (x, y) = ((index as i64) % w, (index as i64) / w);
        for (dx, dy) in MOVES {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            let ni = (ny * w + nx) as usize;
            if !mask[ni] || closed[ni] {
                continue;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal && !(mask[(y * w + nx) as usize] && mask[(ny * w + x) as usize]) {
                continue;
            }
            let step = if diagonal { std::f64::consts::SQRT_2 * res } else { res };
            let cand = g[index] + step;
            if cand < g[ni] {
                g[ni] = cand;
                parent[ni] = index;
                open.push(Open { f: cand + heuristic(ni), index: ni });
            }
        }
    }

    if !closed[target] {
        return Err(PlanError::NoPath);
    }
    let mut cells = vec![known.cell_of(target)];
    let mut cur = target;
    while cur != start_i {
        cur = parent[cur];
        cells.push(known.cell_of(cur));
    }
    cells.reverse();
    let waypoints = cells.iter().map(|&c| known.cell_center(c)).collect();
    Ok(Path { cells, waypoints, cost: g[target] })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room(w: usize, h: usize) -> OccupancyGrid {
        OccupancyGrid::new(w, h, 0.1, Point2::default(), CellState::Free).unwrap()
    }

    #[test]
    fn straight_corridor() {
        let g = room(20, 5);
        let p = plan_path(&g, Point2::new(0.25, 0.25), Point2::new(1.25, 0.25), 0.0, 1.0).unwrap();
        assert_eq!(p.cells.len(), 11);
        assert!((p.cost - 1.0).abs() < 1e-9);
        assert!(p.cells.iter().all(|c| c.y == 2));
    }

    #[test]
    fn enclosed_goal_has_no_path() {
        let mut g = room(20, 20);
        for i in 8..13 {
            for j in [8, 12] {
                g.set(CellIndex::new(i, j), CellState::Occupied);
                g.set(CellIndex::new(j, i), CellState::Occupied);
            }
        }
        let r = plan_path(&g, Point2::new(0.15, 0.15), Point2::new(1.05, 1.05), 0.0, 0.15);
        assert_eq!(r, Err(PlanError::NoPath));
    }

    #[test]
    fn unknown_goal_projects_to_nearest_free_cell() {
        let mut g = room(30, 5);
        for y in 0..5 {
            for x in 20..30 {
                g.set(CellIndex::new(x, y), CellState::Unknown);
            }
        }
        let p = plan_path(&g, Point2::new(0.25, 0.25), Point2::new(2.45, 0.25), 0.0, 1.0).unwrap();
        assert_eq!(*p.cells.last().unwrap(), CellIndex::new(19, 2));
        let far = plan_path(&g, Point2::new(0.25, 0.25), Point2::new(2.95, 0.25), 0.0, 0.5);
        assert_eq!(far, Err(PlanError::NoPath));
    }

    #[test]
    fn inflation_blocks_cells_near_obstacles() {
        let mut g = room(10, 10);
        g.set(CellIndex::new(5, 5), CellState::Occupied);
        let m = traversable_mask(&g, 0.15);
        assert!(!m[g.index_of(CellIndex::new(5, 5))]);
        assert!(!m[g.index_of(CellIndex::new(6, 5))]);
        assert!(!m[g.index_of(CellIndex::new(6, 6))]);
        assert!(m[g.index_of(CellIndex::new(7, 5))]);
        for i in 0..g.len() {
            assert_eq!(m[i], cell_traversable(&g, g.cell_of(i), 0.15));
        }
    }

    #[test]
    fn robot_inside_inflation_can_leave() {
        let mut g = room(20, 20);
        for y in 0..20 {
            g.set(CellIndex::new(5, y), CellState::Occupied);
        }
        let p = plan_path(&g, Point2::new(0.65, 1.05), Point2::new(1.55, 1.05), 0.25, 0.5).unwrap();
        assert_eq!(*p.cells.last().unwrap(), CellIndex::new(15, 10));
    }

    #[test]
    fn start_must_be_free() {
        let mut g = room(5, 5);
        g.set(CellIndex::new(0, 0), CellState::Unknown);
        assert!(matches!(plan_path(&g, Point2::new(0.05, 0.05), Point2::new(0.45, 0.45), 0.0, 1.0), Err(PlanError::StartNotFree { .. })));
    }

    // plain uniform-cost search over the same move set
    fn ucs_cost(mask: &[bool], w: i64, h: i64, s: usize, t: usize, res: f64) -> Option<f64> {
        let mut dist = vec![f64::INFINITY; mask.len()];
        let mut done = vec![false; mask.len()];
        dist[s] = 0.0;
        loop {
            let u = (0..mask.len()).filter(|&i| !done[i] && dist[i].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]))?;
            if u == t {
                return Some(dist[t]);
            }
            done[u] = true;
            let (x, y) = ((u as i64) % w, (u as i64) / w);
            for (dx, dy) in MOVES {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h || !mask[(ny * w + nx) as usize] {
                    continue;
                }
                if dx != 0 && dy != 0 && !(mask[(y * w + nx) as usize] && mask[(ny * w + x) as usize]) {
                    continue;
                }
                let c = dist[u] + if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 * res } else { res };
                let v = (ny * w + nx) as usize;
                if c < dist[v] {
                    dist[v] = c;
                }
            }
        }
    }

    #[test]
    fn astar_cost_matches_uniform_cost_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let mut g = room(20, 20);
            for i in 0..g.len() {
                if rng.random_bool(0.3) {
                    g.set_index(i, CellState::Occupied);
                }
            }
            let s = CellIndex::new(rng.random_range(0..20), rng.random_range(0..20));
            let t = CellIndex::new(rng.random_range(0..20), rng.random_range(0..20));
            g.set(s, CellState::Free);
            g.set(t, CellState::Free);
            let mask = traversable_mask(&g, 0.0);
            let expected = ucs_cost(&mask, 20, 20, g.index_of(s), g.index_of(t), 0.1);
            match plan_path(&g, g.cell_center(s), g.cell_center(t), 0.0, 0.0) {
                Ok(p) => {
                    let e = expected.expect("planner found a path the oracle did not");
                    assert!((p.cost - e).abs() < 1e-9, "{} vs {}", p.cost, e);
                    assert_eq!(*p.cells.last().unwrap(), t);
                }
                Err(PlanError::NoPath) => assert!(expected.is_none()),
                Err(e) => panic!("{e}"),
            }
        }
    }
}
