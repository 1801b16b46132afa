use std::f64::consts::TAU;

use super::{CellState, GridError, OccupancyGrid};
use crate::geometry::{Point2, Pose};

/// A sensed cell: flat grid index plus the state the sensor saw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Observation {
    pub index: usize,
    pub state: CellState,
}

/// Visits every cell the segment `a -> b` passes through, in order, starting
/// with the cell containing `a`. Coordinates are signed and may leave the grid.
/// The visitor returns `false` to stop early.
///
/// Grid traversal in the style of Amanatides & Woo; when the segment crosses a
/// cell corner exactly, the y step is taken first.
pub(crate) fn traverse(grid: &OccupancyGrid, a: Point2, b: Point2, mut visit: impl FnMut(i64, i64) -> bool) {
    let (sx, sy) = grid.to_cell_coords(a);
    let (ex, ey) = grid.to_cell_coords(b);
    let (mut x, mut y) = (sx.floor() as i64, sy.floor() as i64);
    let (end_x, end_y) = (ex.floor() as i64, ey.floor() as i64);
    let (dx, dy) = (ex - sx, ey - sy);

    let axis = |d: f64, s: f64, c: i64| -> (i64, f64, f64) {
        if d > 0.0 {
            (1, (c as f64 + 1.0 - s) / d, 1.0 / d)
        } else if d < 0.0 {
            (-1, (s - c as f64) / -d, -1.0 / d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (step_x, mut t_max_x, t_delta_x) = axis(dx, sx, x);
    let (step_y, mut t_max_y, t_delta_y) = axis(dy, sy, y);

    let max_steps = (end_x - x).unsigned_abs() + (end_y - y).unsigned_abs();
    for _ in 0..=max_steps {
        if !visit(x, y) || (x == end_x && y == end_y) {
            return;
        }
        if t_max_x < t_max_y {
            if t_max_x > 1.0 {
                return;
            }
            x += step_x;
            t_max_x += t_delta_x;
        } else {
            if t_max_y > 1.0 {
                return;
            }
            y += step_y;
            t_max_y += t_delta_y;
        }
    }
}

/// Every cell (signed coordinates) crossed by the segment `a -> b`, in order.
pub fn segment_cells(grid: &OccupancyGrid, a: Point2, b: Point2) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    traverse(grid, a, b, |x, y| {
        out.push((x, y));
        true
    });
    out
}

/// Simulated 2D lidar against a ground-truth grid.
///
/// Beams are evenly spaced starting at the pose heading. Free cells along a
/// beam are reported Free; the first Occupied cell is reported and ends the
/// beam. Unknown truth cells and the grid edge end a beam silently. Output is
/// sorted by index with duplicates removed.
pub fn raycast_scan(truth: &OccupancyGrid, pose: Pose, range: f64, beam_count: usize) -> Result<Vec<Observation>, GridError> {
    let origin = pose.position();
    if truth.world_to_cell(origin).is_none() {
        return Err(GridError::OutOfBounds { x: pose.x, y: pose.y });
    }
    let mut seen: Vec<Option<CellState>> = vec![None; truth.cells().len()];
    let (mut lo, mut hi) = (usize::MAX, 0);
    for k in 0..beam_count.max(1) {
        let bearing = pose.heading + TAU * k as f64 / beam_count.max(1) as f64;
        let end = Point2::new(origin.x + range * bearing.cos(), origin.y + range * bearing.sin());
        traverse(truth, origin, end, |x, y| {
            let state = truth.get_signed(x, y);
            if let Some(s @ (CellState::Free | CellState::Occupied)) = state {
                let i = y as usize * truth.width() + x as usize;
                seen[i] = Some(s);
                lo = lo.min(i);
                hi = hi.max(i);
            }
            state == Some(CellState::Free)
        });
    }
    if lo > hi {
        return Ok(Vec::new());
    }
    let seen = seen[lo..=hi]
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|state| Observation { index: lo + i, state }))
        .collect();
    Ok(seen)
}
