//! Binary morphology on the Free mask of an occupancy grid.
//!
//! Only Free membership is edited: erosion turns Free cells into Unknown,
//! dilation turns Unknown cells into Free, and Occupied cells are never
//! touched (dilation does not grow through them either).

use super::{CellState, OccupancyGrid};

/// Number of erosion (then dilation) passes applied to a merged map.
pub const POSTPROCESS_ITERATIONS: usize = 6;

/// Offsets (dx, dy) relative to the cell being tested. Always contains (0, 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    offsets: Vec<(i64, i64)>,
}

impl StructuringElement {
    /// Returns `None` unless the offsets are nonempty and include the origin.
    pub fn new(offsets: Vec<(i64, i64)>) -> Option<Self> {
        offsets.contains(&(0, 0)).then_some(Self { offsets })
    }

    /// The 3x3 ellipse: center plus its four axial neighbours.
    pub fn ellipse3() -> Self {
        Self { offsets: vec![(0, -1), (-1, 0), (0, 0), (1, 0), (0, 1)] }
    }

    pub fn square3() -> Self {
        Self { offsets: (-1..=1).flat_map(|dy| (-1..=1).map(move |dx| (dx, dy))).collect() }
    }

    pub fn offsets(&self) -> &[(i64, i64)] {
        &self.offsets
    }
}

fn free_mask(grid: &OccupancyGrid) -> Vec<bool> {
    grid.cells().iter().map(|&c| c == CellState::Free).collect()
}

/// `out[x, y] op= mask[x + dx, y + dy]`, with out-of-grid reads yielding `fill`.
fn shift_combine(mask: &[bool], out: &mut [bool], w: usize, h: usize, dx: i64, dy: i64, fill: bool, and: bool) {
    for y in 0..h {
        let sy = y as i64 + dy;
        let row = &mut out[y * w..(y + 1) * w];
        if sy < 0 || sy >= h as i64 {
            for v in row.iter_mut() {
                *v = if and { *v && fill } else { *v || fill };
            }
            continue;
        }
        let src = &mask[sy as usize * w..(sy as usize + 1) * w];
        for (x, v) in row.iter_mut().enumerate() {
            let sx = x as i64 + dx;
            let s = if sx < 0 || sx >= w as i64 { fill } else { src[sx as usize] };
            *v = if and { *v && s } else { *v || s };
        }
    }
}

pub fn erode_free(grid: &OccupancyGrid, kernel: &StructuringElement, iterations: usize) -> OccupancyGrid {
    let (w, h) = (grid.width(), grid.height());
    let mut mask = free_mask(grid);
    for _ in 0..iterations {
        let mut next = mask.clone();
        for &(dx, dy) in kernel.offsets() {
            shift_combine(&mask, &mut next, w, h, dx, dy, false, true);
        }
        mask = next;
    }
    let mut out = grid.clone();
    for (i, keep) in mask.into_iter().enumerate() {
        if grid.cells()[i] == CellState::Free && !keep {
            out.set_index(i, CellState::Unknown);
        }
    }
    out
}

pub fn dilate_free(grid: &OccupancyGrid, kernel: &StructuringElement, iterations: usize) -> OccupancyGrid {
    let (w, h) = (grid.width(), grid.height());
    let blocked: Vec<bool> = grid.cells().iter().map(|&c| c == CellState::Occupied).collect();
    let mut mask = free_mask(grid);
    for _ in 0..iterations {
        let mut next = mask.clone();
        for &(dx, dy) in kernel.offsets() {
            shift_combine(&mask, &mut next, w, h, -dx, -dy, false, false);
        }
        for (v, &b) in next.iter_mut().zip(&blocked) {
            *v &= !b;
        }
        mask = next;
    }
    let mut out = grid.clone();
    for (i, free) in mask.into_iter().enumerate() {
        if free {
            out.set_index(i, CellState::Free);
        }
    }
    out
}

/// Morphological opening of the Free region: removes thin or sparsely
/// connected free space, leaving a margin of Unknown around it.
pub fn postprocess_merged(grid: &OccupancyGrid) -> OccupancyGrid {
    let kernel = StructuringElement::ellipse3();
    let eroded = erode_free(grid, &kernel, POSTPROCESS_ITERATIONS);
    dilate_free(&eroded, &kernel, POSTPROCESS_ITERATIONS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::gridmap::CellIndex;
    use proptest::prelude::*;
    use CellState::*;

    fn filled(w: usize, h: usize, s: CellState) -> OccupancyGrid {
        OccupancyGrid::new(w, h, 0.1, Point2::default(), s).unwrap()
    }

    #[test]
    fn kernel_must_contain_center() {
        assert!(StructuringElement::new(vec![(1, 0)]).is_none());
        assert!(StructuringElement::new(vec![]).is_none());
        assert_eq!(StructuringElement::ellipse3().offsets().len(), 5);
        assert_eq!(StructuringElement::square3().offsets().len(), 9);
    }

    #[test]
    fn erosion_strips_border_ring() {
        let g = filled(9, 9, Free);
        let e = erode_free(&g, &StructuringElement::ellipse3(), 1);
        for y in 0..9 {
            for x in 0..9 {
                let inner = (1..8).contains(&x) && (1..8).contains(&y);
                assert_eq!(e.get(CellIndex::new(x, y)), if inner { Free } else { Unknown }, "({x},{y})");
            }
        }
    }

    #[test]
    fn isolated_speck_is_removed() {
        let mut g = filled(5, 5, Unknown);
        g.set(CellIndex::new(2, 2), Free);
        let e = erode_free(&g, &StructuringElement::ellipse3(), 1);
        assert_eq!(e.count(Free), 0);
    }

    #[test]
    fn dilation_never_overwrites_occupied() {
        let mut g = filled(5, 1, Unknown);
        g.set(CellIndex::new(0, 0), Free);
        g.set(CellIndex::new(2, 0), Occupied);
        let d = dilate_free(&g, &StructuringElement::ellipse3(), 4);
        assert_eq!(d.cells(), &[Free, Free, Occupied, Unknown, Unknown]);
    }

    #[test]
    fn opening_removes_filament_and_keeps_block() {
        let mut g = filled(40, 40, Unknown);
        for y in 5..25 {
            for x in 5..25 {
                g.set(CellIndex::new(x, y), Free);
            }
        }
        // one-cell filament leaving the block
        for x in 25..38 {
            g.set(CellIndex::new(x, 15), Free);
        }
        g.set(CellIndex::new(30, 30), Occupied);
        let p = postprocess_merged(&g);
        for x in 26..38 {
            assert_eq!(p.get(CellIndex::new(x, 15)), Unknown);
        }
        for y in 13..17 {
            for x in 13..17 {
                assert_eq!(p.get(CellIndex::new(x, y)), Free);
            }
        }
        assert_eq!(p.get(CellIndex::new(30, 30)), Occupied);
    }

    fn state() -> impl Strategy<Value = CellState> {
        prop_oneof![3 => Just(Free), 1 => Just(Occupied), 1 => Just(Unknown)]
    }

    proptest! {
        #[test]
        fn opening_is_anti_extensive_and_preserves_occupied(cells in prop::collection::vec(state(), 144), iters in 0usize..4) {
            let g = OccupancyGrid::from_cells(12, 12, 0.1, Point2::default(), cells).unwrap();
            let k = StructuringElement::ellipse3();
            let opened = dilate_free(&erode_free(&g, &k, iters), &k, iters);
            for (before, after) in g.cells().iter().zip(opened.cells()) {
                if *after == Free {
                    prop_assert_eq!(*before, Free);
                }
                prop_assert_eq!(*before == Occupied, *after == Occupied);
            }
        }
    }
}
